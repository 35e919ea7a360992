#!/usr/bin/env python3
# Copyright 2026 The forest-recourse Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Rebuild data/german.data (UCI whitespace format) from the raw

german_credit.csv bundled with the themis-ml package (pypi: themis-ml 0.0.4,
themis_ml/datasets/data/german_credit.csv). The codes are copied verbatim.

usage: make_german_data.py german_credit.csv > data/german.data
"""
import csv
import sys


def main() -> None:
    with open(sys.argv[1], newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            if len(row) != 21:
                sys.exit(f"line {reader.line_num}: expected 21 columns")
            print(" ".join(row))


if __name__ == "__main__":
    main()
