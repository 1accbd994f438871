#!/usr/bin/env python3
# Copyright 2026 The blockpair Authors.
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
"""Resolves every instruction address of a dump with addr2line and writes an
annotation file: {"0x...": [["file", line], ...]}.

Paths under --root are written relative to it, so the file does not
depend on the build directory.
"""

import argparse
import json
import os
import subprocess


def resolve(binary, addresses, resolver="addr2line"):
    stdin = "".join(hex(a) + "\n" for a in addresses)
    out = subprocess.run([resolver, "-e", binary, "-a", "-i", "-f"], input=stdin,
                         capture_output=True, text=True, check=True).stdout.splitlines()
    result, current, k = {}, None, 0
    while k < len(out):
        line = out[k]
        if line.startswith("0x"):
            current = int(line, 16)
            result[current] = []
            k += 1
            continue
        location = out[k + 1]
        k += 2
        path, _, rest = location.rpartition(":")
        num = rest.split()[0] if rest.split() else "?"
        if path in ("??", "") or not num.isdigit() or int(num) == 0:
            continue
        result[current].append([path, int(num)])
    return result


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("dump")
    p.add_argument("--binary", help="binary to resolve (defaults to config.binary_path)")
    p.add_argument("--resolver", default="addr2line")
    p.add_argument("--root", help="strip this directory from resolved paths")
    p.add_argument("-o", "--output", required=True)
    a = p.parse_args()
    with open(a.dump) as fh:
        dump = json.load(fh)
    binary = a.binary or dump["config"]["binary_path"]
    addresses = sorted({int(i["addr"], 16) for f in dump["functions"] if not f["external"]
                        for b in f["blocks"] for i in b["instructions"]})
    mapping = resolve(binary, addresses, a.resolver)
    out = {}
    for addr in addresses:
        lines = []
        for path, line in mapping.get(addr, []):
            path = os.path.normpath(path)
            if a.root and path.startswith(os.path.join(os.path.abspath(a.root), "")):
                path = os.path.relpath(path, a.root)
            if [path, line] not in lines:
                lines.append([path, line])
        out[hex(addr)] = lines
    with open(a.output, "w") as fh:
        json.dump(out, fh, indent=0, sort_keys=False)
        fh.write("\n")


if __name__ == "__main__":
    main()
