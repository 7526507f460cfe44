# Copyright 2026 The ecotraj Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerate data/cycles and data/maps from the built-in synthetic generators.

Usage: python scripts/generate_data.py [output_dir]   (default: data/)
"""

import pathlib
import sys

import ecotraj


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else root / "data"
    ecotraj.write_bundled_data(out)
    for path in sorted(out.glob("*/*.csv")):
        print(f"{ecotraj.sha256_file(str(path))}  {path.relative_to(out)}")


if __name__ == "__main__":
    main()
