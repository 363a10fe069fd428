#!/usr/bin/env python3
# Copyright 2026 The snoutbench Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the UCI Adult files (adult.data, adult.test) into one clean CSV.

Every column is kept as a categorical string. The income column is moved
last and normalised to "<=50K" / ">50K" so it can serve as the binary
sensitive attribute.

Usage: prepare_adult.py adult.data adult.test > data/adult.csv
"""

import csv
import sys

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def rows(path):
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(COLUMNS):
                continue
            cells[-1] = cells[-1].rstrip(".")
            yield cells


def main(argv):
    if len(argv) < 1:
        sys.stderr.write(__doc__)
        return 2
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(COLUMNS)
    for path in argv:
        for cells in rows(path):
            out.writerow(cells)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
