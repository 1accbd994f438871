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
"""Exports an ELF binary's .text into the blockpair dump schema via objdump.

Basic blocks are split at leaders: function entries, in-function branch
targets and the instruction after a branch or return. PLT stubs become
external library functions.
"""

import argparse
import json
import re
import subprocess
import sys

FUNC_RE = re.compile(r"^([0-9a-f]+) <(.+)>:$")
INSN_RE = re.compile(r"^\s+([0-9a-f]+):\s+(.*)$")
SECTION_RE = re.compile(r"^Disassembly of section (\S+):$")
COMMENT_RE = re.compile(r"\s+(#|//|;)\s*([0-9a-f]+)?.*$")

X86_PREFIXES = {"rep", "repe", "repz", "repne", "repnz", "lock", "bnd", "notrack",
                "data16", "addr32", "cs", "ds", "es", "ss", "fs", "gs"}
PLT_SECTIONS = {".plt", ".plt.sec", ".plt.got"}


def is_branch(isa, mnemonic):
    m = mnemonic.split()[-1].lower()
    if isa in ("x86", "x86_64"):
        return m.startswith("j") or m.startswith("loop") or m == "xbegin"
    if isa == "aarch64":
        return m in ("b", "br", "cbz", "cbnz", "tbz", "tbnz") or m.startswith("b.")
    base = m.split(".")[0]
    return (re.fullmatch(r"bx?(eq|ne|cs|hs|cc|lo|mi|pl|vs|vc|hi|ls|ge|lt|gt|le|al)?", base)
            is not None or base in ("cbz", "cbnz"))


def is_return(isa, mnemonic, operands):
    m = mnemonic.split()[-1].lower()
    if isa in ("x86", "x86_64"):
        return m.startswith("ret") or m in ("hlt", "ud2")
    if isa == "aarch64":
        return m == "ret"
    return (m.startswith("bx") and operands == ["lr"]) or (
        m.startswith("pop") and any("pc" in o for o in operands))


def is_padding(isa, mnemonic, operands):
    m = mnemonic.split()[-1].lower()
    if isa in ("x86", "x86_64"):
        return m.startswith("nop") or m == "int3" or (m == "xchg" and operands == ["ax", "ax"])
    return m == "nop"


def is_unconditional(isa, mnemonic, operands):
    m = mnemonic.split()[-1].lower()
    if is_return(isa, mnemonic, operands):
        return True
    if isa in ("x86", "x86_64"):
        return m == "jmp"
    if isa == "aarch64":
        return m in ("b", "br")
    return m in ("b", "bx", "b.w")


def split_operands(text):
    """Splits at top-level commas, or at whitespace when there are none."""
    def split(on_comma):
        parts, cur, depth, angle = [], "", 0, False
        for c in text:
            if c == "<":
                angle = True
            elif c == ">":
                angle = False
            if c in "[{(":
                depth += 1
            elif c in "]})" and depth > 0:
                depth -= 1
            sep = depth == 0 and not angle and (c == "," if on_comma else c.isspace())
            if sep:
                parts.append(cur)
                cur = ""
            else:
                cur += c
        parts.append(cur)
        return [p.strip() for p in parts if p.strip()]

    depth, comma = 0, False
    for c in text:
        if c in "[{(":
            depth += 1
        elif c in "]})" and depth > 0:
            depth -= 1
        elif c == "," and depth == 0:
            comma = True
    return split(comma)


def parse_instruction(isa, text):
    words = text.split()
    i = 0
    if isa in ("x86", "x86_64"):
        while i < len(words) - 1 and words[i].lower() in X86_PREFIXES:
            i += 1
    mnemonic = " ".join(words[: i + 1])
    rest = text.split(None, i + 1)[i + 1] if len(words) > i + 1 else ""
    comment_target = None
    m = COMMENT_RE.search(rest)
    if m:
        comment_target = int(m.group(2), 16) if m.group(2) else None
        rest = rest[: m.start()]
    return mnemonic, split_operands(rest), comment_target


def section_bytes(binary, name):
    """Returns (vma, bytes) of a section, or None."""
    out = subprocess.run(["objdump", "-h", binary], capture_output=True, text=True, check=True)
    for line in out.stdout.splitlines():
        f = line.split()
        if len(f) >= 6 and f[1] == name:
            size, vma, offset = int(f[2], 16), int(f[3], 16), int(f[5], 16)
            with open(binary, "rb") as fh:
                fh.seek(offset)
                return vma, fh.read(size)
    return None


def string_at(rodata, address):
    if rodata is None:
        return None
    vma, data = rodata
    k = address - vma
    if k < 0 or k >= len(data):
        return None
    end = data.find(b"\0", k)
    if end <= k:
        return None
    s = data[k:end]
    if all(32 <= b < 127 or b in (9, 10) for b in s):
        return s.decode()
    return None


def export(binary, isa, compiler, opt_level, program, objdump="objdump", mark_strings=True):
    args = [objdump, "-d", "--no-show-raw-insn", binary]
    if isa in ("x86", "x86_64"):
        args[2:2] = ["-M", "intel"]
    out = subprocess.run(args, capture_output=True, text=True, check=True).stdout
    rodata = section_bytes(binary, ".rodata") if mark_strings else None

    functions, library, section, current = [], [], None, None
    for line in out.splitlines():
        m = SECTION_RE.match(line)
        if m:
            section, current = m.group(1), None
            continue
        m = FUNC_RE.match(line)
        if m:
            name = m.group(2)
            current = None
            if section in PLT_SECTIONS and name.endswith("@plt"):
                lib = name[: -len("@plt")]
                if lib not in library:
                    library.append(lib)
                    functions.append({"name": lib, "entry": hex(int(m.group(1), 16)),
                                      "external": True, "library": True, "blocks": []})
            elif section == ".text":
                current = {"name": name, "entry": int(m.group(1), 16), "insns": []}
                functions.append(current)
            continue
        m = INSN_RE.match(line)
        if m and current is not None:
            text = m.group(2).strip()
            if not text or text.startswith("(bad)") or text.startswith("..."):
                continue
            mnemonic, operands, target = parse_instruction(isa, text)
            strings = []
            if target is not None and any(("rip" in o or "pc" in o) for o in operands):
                if string_at(rodata, target) is not None:
                    strings = [k for k, o in enumerate(operands) if "rip" in o or "pc" in o][:1]
            current["insns"].append({"addr": int(m.group(1), 16), "mnemonic": mnemonic,
                                     "operands": operands, "raw": text, "strings": strings})

    result = []
    for f in functions:
        if "insns" not in f:
            result.append(f)
            continue
        insns = f["insns"]
        if not insns:
            continue
        addrs = {i["addr"] for i in insns}
        leaders = {insns[0]["addr"]}
        targets = set()
        for k, ins in enumerate(insns):
            if is_branch(isa, ins["mnemonic"]):
                for op in ins["operands"]:
                    t = op.lstrip("#")
                    if re.fullmatch(r"(0x)?[0-9a-f]+", t):
                        a = int(t, 16)
                        if a in addrs:
                            leaders.add(a)
                            targets.add(a)
                        break
            if (is_branch(isa, ins["mnemonic"]) or is_return(isa, ins["mnemonic"], ins["operands"])) \
                    and k + 1 < len(insns):
                leaders.add(insns[k + 1]["addr"])
        blocks = []
        for ins in insns:
            if ins["addr"] in leaders:
                blocks.append({"start": hex(ins["addr"]), "instructions": []})
            rec = {"addr": hex(ins["addr"]), "mnemonic": ins["mnemonic"],
                   "operands": ins["operands"], "raw": ins["raw"]}
            if ins["strings"]:
                rec["strings"] = ins["strings"]
            blocks[-1]["instructions"].append(rec)
        # Alignment padding that follows a return or jump and that nothing
        # jumps to is not code of the function.
        kept = []
        for k, b in enumerate(blocks):
            if k > 0 and int(b["start"], 16) not in targets:
                last = blocks[k - 1]["instructions"][-1]
                if is_unconditional(isa, last["mnemonic"], last["operands"]) and \
                        all(is_padding(isa, i["mnemonic"], i["operands"]) for i in b["instructions"]):
                    continue
            kept.append(b)
        blocks = kept
        result.append({"name": f["name"], "entry": hex(f["entry"]), "external": False,
                       "library": False, "blocks": blocks})

    # Symbols can repeat (local statics in different units); keep the first.
    seen, unique = set(), []
    for f in result:
        if f["name"] not in seen:
            seen.add(f["name"])
            unique.append(f)
    return {"config": {"isa": isa, "compiler": compiler, "opt_level": opt_level,
                       "program": program, "binary_path": binary},
            "library_functions": sorted(library), "functions": unique}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("binary")
    p.add_argument("--isa", required=True, choices=["x86", "x86_64", "arm32", "aarch64"])
    p.add_argument("--compiler", required=True, choices=["gcc", "clang"])
    p.add_argument("--opt-level", required=True, choices=["O0", "O1", "O2", "O3"])
    p.add_argument("--program", required=True)
    p.add_argument("--binary-path", help="path recorded in the dump (defaults to BINARY)")
    p.add_argument("--objdump", default="objdump")
    p.add_argument("--no-strings", action="store_true", help="do not mark string operands")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    a = p.parse_args()
    dump = export(a.binary, a.isa, a.compiler, a.opt_level, a.program, a.objdump,
                  not a.no_strings)
    if a.binary_path:
        dump["config"]["binary_path"] = a.binary_path
    text = json.dumps(dump, indent=1) + "\n"
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
