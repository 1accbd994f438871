// Copyright 2026 The blockpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Instruction tokenization and vocabulary normalization.
//
//   numeric constants        -> <POSITIVE> / <NEGATIVE> / <ZERO> (rendered sign)
//   calls                    -> library name kept if in the dictionary, else <FOO>
//   code / memory addresses  -> <ADDRESS>
//   exporter-marked strings  -> <STRING>
//
// Registers and mnemonics pass through untouched.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockpair/error.hpp"
#include "blockpair/types.hpp"

namespace blockpair {

inline constexpr std::string_view kPositive = "<POSITIVE>";
inline constexpr std::string_view kNegative = "<NEGATIVE>";
inline constexpr std::string_view kZero = "<ZERO>";
inline constexpr std::string_view kAddress = "<ADDRESS>";
inline constexpr std::string_view kString = "<STRING>";
inline constexpr std::string_view kFoo = "<FOO>";

inline constexpr std::string_view kInstructionSeparator = ";";

struct NormalizedInstruction {
  std::vector<std::string> tokens;

  std::string str() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }

  friend bool operator==(const NormalizedInstruction&, const NormalizedInstruction&) = default;
};

inline bool is_placeholder(std::string_view tok) {
  return tok == kPositive || tok == kNegative || tok == kZero || tok == kAddress ||
         tok == kString || tok == kFoo;
}

enum class LiteralSign { kBelowZero, kIsZero, kAboveZero };

// Recognizes numeric literals as disassemblers print them: optional '#' or
// '$' prefix, optional sign, then hex (0x...) or decimal with an optional
// fraction and exponent.
inline std::optional<LiteralSign> parse_literal(std::string_view tok) {
  if (!tok.empty() && (tok.front() == '#' || tok.front() == '$')) tok.remove_prefix(1);
  bool negative = false;
  if (!tok.empty() && (tok.front() == '-' || tok.front() == '+')) {
    negative = tok.front() == '-';
    tok.remove_prefix(1);
  }
  if (tok.empty()) return std::nullopt;
  bool zero = true;
  auto hex = [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; };
  auto dec = [](char c) { return c >= '0' && c <= '9'; };
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
    for (char c : tok.substr(2)) {
      if (!hex(c)) return std::nullopt;
      zero = zero && c == '0';
    }
  } else {
    std::size_t k = 0;
    if (!dec(tok[0])) return std::nullopt;
    for (; k < tok.size() && dec(tok[k]); ++k)
      if (tok[k] != '0') zero = false;
    if (k < tok.size() && tok[k] == '.') {
      ++k;
      if (k >= tok.size() || !dec(tok[k])) return std::nullopt;
      for (; k < tok.size() && dec(tok[k]); ++k)
      if (tok[k] != '0') zero = false;
    }
    if (k < tok.size() && (tok[k] == 'e' || tok[k] == 'E')) {
      ++k;
      if (k < tok.size() && (tok[k] == '+' || tok[k] == '-')) ++k;
      if (k >= tok.size() || !dec(tok[k])) return std::nullopt;
      while (k < tok.size() && dec(tok[k])) ++k;
    }
    if (k != tok.size()) return std::nullopt;
  }
  if (zero) return LiteralSign::kIsZero;
  return negative ? LiteralSign::kBelowZero : LiteralSign::kAboveZero;
}

inline std::string_view sign_placeholder(LiteralSign s) {
  switch (s) {
    case LiteralSign::kBelowZero: return kNegative;
    case LiteralSign::kIsZero: return kZero;
    case LiteralSign::kAboveZero: return kPositive;
  }
  return kPositive;
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// "<prefix><n>" with lo <= n <= hi and no leading zeros.
inline bool numbered(std::string_view s, std::string_view prefix, int lo, int hi) {
  if (s.size() <= prefix.size() || s.substr(0, prefix.size()) != prefix) return false;
  std::string_view digits = s.substr(prefix.size());
  if (digits.size() > 2 || (digits.size() > 1 && digits[0] == '0')) return false;
  int n = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return false;
    n = n * 10 + (c - '0');
  }
  return n >= lo && n <= hi;
}

inline bool is_x86_register(std::string_view tok) {
  std::string s = lower(tok);
  if (!s.empty() && s.front() == '%') s.erase(0, 1);
  static const std::set<std::string, std::less<>> kNamed = {
      "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rsp", "rbp", "rip", "eax", "ebx", "ecx",
      "edx", "esi", "edi", "esp", "ebp", "eip", "ax",  "bx",  "cx",  "dx",  "si",  "di",
      "sp",  "bp",  "ip",  "al",  "bl",  "cl",  "dl",  "ah",  "bh",  "ch",  "dh",  "sil",
      "dil", "spl", "bpl", "cs",  "ds",  "es",  "fs",  "gs",  "ss",  "st",  "eflags", "rflags"};
  if (kNamed.count(s)) return true;
  for (std::string_view suffix : {"", "d", "w", "b", "l"}) {
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix &&
        numbered(std::string_view(s).substr(0, s.size() - suffix.size()), "r", 8, 15))
      return true;
  }
  return numbered(s, "xmm", 0, 31) || numbered(s, "ymm", 0, 31) || numbered(s, "zmm", 0, 31) ||
         numbered(s, "mm", 0, 7) || numbered(s, "k", 0, 7) || numbered(s, "st", 0, 7) ||
         numbered(s, "cr", 0, 15) || numbered(s, "dr", 0, 7);
}

inline bool is_arm32_register(std::string_view tok) {
  std::string s = lower(tok);
  static const std::set<std::string, std::less<>> kNamed = {
      "sp", "lr", "pc", "fp", "ip", "sl", "sb", "apsr", "apsr_nzcv", "cpsr", "spsr", "fpscr", "fpexc"};
  if (kNamed.count(s)) return true;
  if (s.rfind("cpsr_", 0) == 0 || s.rfind("spsr_", 0) == 0) return true;
  return numbered(s, "r", 0, 15) || numbered(s, "s", 0, 31) || numbered(s, "d", 0, 31) ||
         numbered(s, "q", 0, 15);
}

inline bool is_aarch64_register(std::string_view tok) {
  std::string s = lower(tok);
  // Vector arrangement / element suffixes: v0.16b, v1.s
  if (auto dot = s.find('.'); dot != std::string::npos) s.resize(dot);
  static const std::set<std::string, std::less<>> kNamed = {"sp", "wsp", "xzr", "wzr", "fp", "lr"};
  if (kNamed.count(s)) return true;
  for (std::string_view p : {"x", "w"})
    if (numbered(s, p, 0, 30)) return true;
  for (std::string_view p : {"v", "b", "h", "s", "d", "q"})
    if (numbered(s, p, 0, 31)) return true;
  return false;
}

inline bool is_pc_register(std::string_view tok) {
  std::string s = lower(tok);
  if (!s.empty() && s.front() == '%') s.erase(0, 1);
  return s == "rip" || s == "eip" || s == "pc";
}

inline bool is_segment_token(std::string_view tok) {
  if (tok.size() != 3 || tok.back() != ':') return false;
  std::string s = lower(tok.substr(0, 2));
  return s == "cs" || s == "ds" || s == "es" || s == "fs" || s == "gs" || s == "ss";
}

// Ghidra-style auto labels: LAB_00101139, DAT_00104010, ...
inline bool is_auto_label(std::string_view tok) {
  for (std::string_view p : {"LAB_", "DAT_", "PTR_", "FUN_", "UNK_", "SUB_"}) {
    if (tok.size() > p.size() && tok.substr(0, p.size()) == p) {
      std::string_view rest = tok.substr(p.size());
      if (std::all_of(rest.begin(), rest.end(),
                      [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); }))
        return true;
    }
  }
  return false;
}

// "<main+0x20>" style symbol annotations printed next to a resolved target.
inline bool is_annotation(std::string_view tok) {
  return tok.size() >= 2 && tok.front() == '<' && tok.back() == '>' && !is_placeholder(tok);
}

enum class CallClass { kOther, kCall, kBranch };

inline bool is_arm_condition(std::string_view c) {
  static constexpr std::array<std::string_view, 17> kConds = {
      "eq", "ne", "cs", "hs", "cc", "lo", "mi", "pl", "vs", "vc", "hi", "ls", "ge", "lt", "gt", "le", "al"};
  return c.empty() || std::find(kConds.begin(), kConds.end(), c) != kConds.end();
}

inline CallClass classify(std::string_view mnemonic_core, Isa isa) {
  std::string m = lower(mnemonic_core);
  switch (isa) {
    case Isa::kX86:
    case Isa::kX86_64:
      if (m == "call" || m == "callq" || m == "calll" || m == "callw") return CallClass::kCall;
      if (!m.empty() && m[0] == 'j') return CallClass::kBranch;
      if (m == "loop" || m == "loope" || m == "loopz" || m == "loopne" || m == "loopnz" ||
          m == "xbegin")
        return CallClass::kBranch;
      return CallClass::kOther;
    case Isa::kArm32: {
      if (m.size() > 2 && (m.ends_with(".w") || m.ends_with(".n"))) m.resize(m.size() - 2);
      if (m.rfind("blx", 0) == 0 && is_arm_condition(std::string_view(m).substr(3)))
        return CallClass::kCall;
      if (m.rfind("bl", 0) == 0 && is_arm_condition(std::string_view(m).substr(2)))
        return CallClass::kCall;
      if (m.rfind("bx", 0) == 0 && is_arm_condition(std::string_view(m).substr(2)))
        return CallClass::kBranch;
      if (m.rfind("b", 0) == 0 && is_arm_condition(std::string_view(m).substr(1)))
        return CallClass::kBranch;
      if (m == "cbz" || m == "cbnz") return CallClass::kBranch;
      return CallClass::kOther;
    }
    case Isa::kAArch64:
      if (m == "bl") return CallClass::kCall;
      if (m == "b" || m == "br" || m == "cbz" || m == "cbnz" || m == "tbz" || m == "tbnz" ||
          m.rfind("b.", 0) == 0 || m.rfind("bc.", 0) == 0)
        return CallClass::kBranch;
      return CallClass::kOther;
  }
  return CallClass::kOther;
}

// Loads that take a PC-relative literal operand printed without '#'.
inline bool arm_pc_relative_mnemonic(std::string_view mnemonic_core) {
  std::string m = lower(mnemonic_core);
  return m.rfind("ldr", 0) == 0 || m.rfind("vldr", 0) == 0 || m == "adr" || m == "adrp" ||
         m == "prfm" || m.rfind("adr.", 0) == 0;
}

}  // namespace detail

inline bool is_register(std::string_view tok, Isa isa) {
  switch (isa) {
    case Isa::kX86:
    case Isa::kX86_64: return detail::is_x86_register(tok);
    case Isa::kArm32: return detail::is_arm32_register(tok);
    case Isa::kAArch64: return detail::is_aarch64_register(tok);
  }
  return false;
}

namespace detail {

// "1.5e" or "#2e": a decimal literal waiting for its exponent sign.
inline bool decimal_exponent_prefix(std::string_view cur) {
  if (cur.size() < 2 || (cur.back() != 'e' && cur.back() != 'E')) return false;
  std::string_view body = cur.substr(0, cur.size() - 1);
  if (!body.empty() && (body.front() == '#' || body.front() == '$')) body.remove_prefix(1);
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) body.remove_prefix(1);
  if (body.empty() || !std::isdigit(static_cast<unsigned char>(body.front()))) return false;
  if (body.size() > 1 && (body[1] == 'x' || body[1] == 'X')) return false;
  return std::all_of(body.begin(), body.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; });
}

}  // namespace detail

// Splits one operand into tokens. Whitespace and commas separate; brackets,
// braces, parentheses, '+', '-', '*' and '!' are tokens of their own, except
// that a sign directly after '#' or '$' stays with its immediate. "<...>"
// groups and x86 segment prefixes ("fs:") are single tokens. A comment
// marker (';', x86 '#', ARM '@') ends the operand.
inline std::vector<std::string> tokenize_operand(std::string_view text, Isa isa) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  const bool x86 = isa == Isa::kX86 || isa == Isa::kX86_64;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == ';') break;
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      flush();
      continue;
    }
    if (cur.empty() && x86 && c == '#' &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      break;
    if (cur.empty() && !x86 && c == '@' &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))
      break;
    if (c == '<' && cur.empty()) {
      auto close = text.find('>', i);
      auto stop = text.find_first_of(" \t,", i);
      if (close != std::string_view::npos && (stop == std::string_view::npos || close < stop)) {
        out.emplace_back(text.substr(i, close - i + 1));
        i = close;
        continue;
      }
    }
    if ((c == '-' || c == '+') && (cur == "#" || cur == "$" || detail::decimal_exponent_prefix(cur))) {
      cur += c;
      continue;
    }
    if (c == '[' || c == ']' || c == '{' || c == '}' || c == '(' || c == ')' || c == '+' ||
        c == '-' || c == '*' || c == '!') {
      flush();
      out.emplace_back(1, c);
      continue;
    }
    cur += c;
    if (c == ':' && x86 && detail::is_segment_token(cur)) flush();
  }
  flush();
  return out;
}

// Strips "<...>", a "+offset" suffix and an "@..." suffix from a call
// target ("<printf@plt>" -> "printf").
inline std::string call_target_name(std::string_view tok) {
  if (tok.size() >= 2 && tok.front() == '<' && tok.back() == '>') tok = tok.substr(1, tok.size() - 2);
  if (auto plus = tok.find('+'); plus != std::string_view::npos && plus > 0) tok = tok.substr(0, plus);
  if (auto at = tok.find('@'); at != std::string_view::npos && at > 0) tok = tok.substr(0, at);
  return std::string(tok);
}

template <typename Dict>
NormalizedInstruction normalize_instruction(const Instruction& ins, Isa isa, const Dict& dict) {
  using detail::CallClass;
  NormalizedInstruction out;

  std::vector<std::string> mnemonic;
  for (auto& t : tokenize_operand(ins.mnemonic, isa)) mnemonic.push_back(std::move(t));
  if (mnemonic.empty()) mnemonic.push_back(ins.mnemonic);
  const CallClass cls = detail::classify(mnemonic.back(), isa);
  const bool arm = isa == Isa::kArm32 || isa == Isa::kAArch64;
  const bool pc_relative_load = arm && detail::arm_pc_relative_mnemonic(mnemonic.back());
  out.tokens = mnemonic;

  // Tokenize operands, replacing exporter-marked string operands wholesale
  // and dropping symbol annotations (kept aside as call-name candidates).
  std::vector<std::vector<std::string>> operands;
  std::vector<std::string> annotations;
  for (std::size_t k = 0; k < ins.operands.size(); ++k) {
    if (std::binary_search(ins.string_operands.begin(), ins.string_operands.end(), k)) {
      operands.push_back({std::string(kString)});
      continue;
    }
    std::vector<std::string> toks;
    for (auto& t : tokenize_operand(ins.operands[k], isa)) {
      if (detail::is_annotation(t)) {
        annotations.push_back(std::move(t));
      } else {
        toks.push_back(std::move(t));
      }
    }
    if (!toks.empty()) operands.push_back(std::move(toks));
  }

  auto is_memory = [](const std::vector<std::string>& toks) {
    return std::any_of(toks.begin(), toks.end(), [](const std::string& t) {
      return t == "[" || t == "(" || t == "*";
    });
  };

  // Generic rewriting of one operand's tokens: constants by sign, addresses
  // by context.
  auto rewrite = [&](const std::vector<std::string>& toks) {
    // Fold a '+'/'-' operator into the literal that follows it.
    struct Tok {
      std::string text;
      std::optional<LiteralSign> literal;
    };
    std::vector<Tok> folded;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto lit = parse_literal(toks[i]);
      if ((toks[i] == "+" || toks[i] == "-") && i + 1 < toks.size()) {
        if (auto next = parse_literal(toks[i + 1])) {
          if (toks[i] == "-" && *next != LiteralSign::kIsZero)
            next = *next == LiteralSign::kBelowZero ? LiteralSign::kAboveZero : LiteralSign::kBelowZero;
          folded.push_back({toks[i] + toks[i + 1], next});
          ++i;
          continue;
        }
      }
      folded.push_back({toks[i], lit});
    }

    // Classify each bracket group: a literal inside a group that uses the
    // program counter, or that has no register at all, is an address.
    std::vector<int> group_of(folded.size(), -1);
    struct Group {
      bool pc = false;
      bool reg = false;
      bool indexed = false;  // "st(1)", "v0.s[1]"
    };
    std::vector<Group> groups;
    int depth = 0;
    for (std::size_t i = 0; i < folded.size(); ++i) {
      const std::string& t = folded[i].text;
      if (t == "[" || t == "(") {
        if (depth++ == 0) {
          groups.push_back({});
          groups.back().indexed = i > 0 && is_register(folded[i - 1].text, isa);
        }
      } else if ((t == "]" || t == ")") && depth > 0) {
        --depth;
        if (depth == 0) {
          group_of[i] = static_cast<int>(groups.size()) - 1;
          continue;
        }
      }
      if (depth > 0) {
        group_of[i] = static_cast<int>(groups.size()) - 1;
        if (is_register(t, isa)) groups.back().reg = true;
        if (detail::is_pc_register(t)) groups.back().pc = true;
      }
    }

    std::vector<std::string> result;
    for (std::size_t i = 0; i < folded.size(); ++i) {
      const Tok& t = folded[i];
      if (detail::is_auto_label(t.text)) {
        result.emplace_back(kAddress);
        continue;
      }
      if (!t.literal) {
        // objdump prints PC-relative literal addresses as bare hex ("400a30").
        const bool bare_hex =
            pc_relative_load && group_of[i] < 0 && !is_register(t.text, isa) &&
            std::all_of(t.text.begin(), t.text.end(),
                        [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
        if (bare_hex) {
          result.emplace_back(kAddress);
          continue;
        }
        result.push_back(t.text);
        continue;
      }
      int g = group_of[i];
      // AT&T displacement: "0x10(%rbp)" belongs to the following group.
      if (g < 0 && i + 1 < folded.size() && folded[i + 1].text == "(") g = group_of[i + 1];
      bool address;
      if (g >= 0) {
        const Group& grp = groups[static_cast<std::size_t>(g)];
        address = grp.pc || (!grp.reg && !grp.indexed);
      } else if (i > 0 && detail::is_segment_token(folded[i - 1].text)) {
        address = true;
      } else if (arm) {
        char lead = t.text.empty() ? '\0' : t.text.front();
        address = pc_relative_load && lead != '#' && lead != '+' && lead != '-';
      } else {
        address = false;
      }
      result.emplace_back(address ? kAddress : sign_placeholder(*t.literal));
    }
    return result;
  };

  auto append = [&](const std::vector<std::string>& toks) {
    out.tokens.insert(out.tokens.end(), toks.begin(), toks.end());
  };

  if (cls == CallClass::kCall) {
    std::vector<std::string> flat;
    for (const auto& op : operands) flat.insert(flat.end(), op.begin(), op.end());
    const bool register_target = flat.size() == 1 && is_register(flat.front(), isa);
    if (is_memory(flat) || register_target) {
      for (const auto& op : operands) append(rewrite(op));
      return out;
    }
    if (flat.empty() && annotations.empty()) return out;
    std::vector<std::string> candidates = annotations;
    candidates.insert(candidates.end(), flat.begin(), flat.end());
    for (const auto& c : candidates) {
      if (is_placeholder(c) || parse_literal(c)) continue;
      std::string name = call_target_name(c);
      if (!name.empty() && dict.find(name) != dict.end()) {
        out.tokens.push_back(name);
        return out;
      }
    }
    out.tokens.emplace_back(kFoo);
    return out;
  }

  if (cls == CallClass::kBranch) {
    if (operands.empty()) {
      if (!annotations.empty()) out.tokens.emplace_back(kAddress);
      return out;
    }
    for (std::size_t k = 0; k + 1 < operands.size(); ++k) append(rewrite(operands[k]));
    const auto& target = operands.back();
    if (is_memory(target) || (target.size() == 1 && is_register(target.front(), isa))) {
      append(rewrite(target));
    } else {
      out.tokens.emplace_back(kAddress);
    }
    return out;
  }

  for (const auto& op : operands) append(rewrite(op));
  return out;
}

inline NormalizedInstruction normalize_instruction(const Instruction& ins, std::string_view isa,
                                                   const std::set<std::string>& dict) {
  auto parsed = parse_isa(isa);
  if (!parsed) throw UnknownIsaError(std::string(isa));
  return normalize_instruction(ins, *parsed, dict);
}

template <typename Dict>
std::vector<NormalizedInstruction> normalize_block(const BasicBlock& block, Isa isa,
                                                   const Dict& dict) {
  std::vector<NormalizedInstruction> out;
  out.reserve(block.instructions.size());
  for (const auto& ins : block.instructions) out.push_back(normalize_instruction(ins, isa, dict));
  return out;
}

// Flat dataset rendering: instruction tokens joined by spaces, instructions
// joined by " ; ".
inline std::string render(std::span<const NormalizedInstruction> block) {
  std::string out;
  for (const auto& ins : block) {
    if (!out.empty()) {
      out += ' ';
      out += kInstructionSeparator;
      out += ' ';
    }
    out += ins.str();
  }
  return out;
}

namespace detail {

// Offset of a trailing disassembler comment: ';', or a '#' or '@' standing
// alone after whitespace. Immediates ("#12") never stand alone.
inline std::size_t comment_start(std::string_view text) {
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '[' || c == '{' || c == '(') ++depth;
    if ((c == ']' || c == '}' || c == ')') && depth > 0) --depth;
    if (depth > 0) continue;
    if (c == ';') return i;
    const bool alone = (i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1]))) &&
                       (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])));
    if ((c == '#' || c == '@') && alone) return i;
  }
  return text.size();
}

}  // namespace detail

// Parses "mnemonic op1, op2" (or a space-separated normalized rendering)
// into an Instruction. Known x86 prefixes stay attached to the mnemonic.
inline Instruction parse_instruction_text(std::string_view text, Address address = 0) {
  Instruction ins;
  ins.address = address;
  ins.raw_text = std::string(text);
  auto skip_space = [&](std::size_t i) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    return i;
  };
  auto word_end = [&](std::size_t i) {
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    return i;
  };
  static const std::set<std::string, std::less<>> kPrefixes = {
      "rep", "repe", "repz", "repne", "repnz", "lock", "bnd", "notrack", "data16", "addr32"};
  std::size_t i = skip_space(0);
  std::size_t e = word_end(i);
  ins.mnemonic = std::string(text.substr(i, e - i));
  while (kPrefixes.count(detail::lower(text.substr(i, e - i)))) {
    std::size_t ni = skip_space(e);
    std::size_t ne = word_end(ni);
    if (ni == ne) break;
    ins.mnemonic = std::string(text.substr(i, ne - i));
    e = ne;
  }
  std::string_view rest = text.substr(skip_space(e));
  rest = rest.substr(0, detail::comment_start(rest));

  // Split at top-level commas; without any, at top-level whitespace.
  auto split = [&](bool on_comma) {
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    bool angle = false;
    for (char c : rest) {
      if (c == '<') angle = true;
      if (c == '>') angle = false;
      if (c == '[' || c == '{' || c == '(') ++depth;
      if ((c == ']' || c == '}' || c == ')') && depth > 0) --depth;
      bool sep = depth == 0 && !angle &&
                 (on_comma ? c == ',' : std::isspace(static_cast<unsigned char>(c)) != 0);
      if (sep) {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
        continue;
      }
      cur += c;
    }
    if (!cur.empty()) parts.push_back(cur);
    for (auto& p : parts) {
      auto b = p.find_first_not_of(" \t");
      auto en = p.find_last_not_of(" \t");
      p = b == std::string::npos ? std::string() : p.substr(b, en - b + 1);
    }
    std::erase_if(parts, [](const std::string& p) { return p.empty(); });
    return parts;
  };
  bool has_comma = false;
  {
    int depth = 0;
    for (char c : rest) {
      if (c == '[' || c == '{' || c == '(') ++depth;
      if ((c == ']' || c == '}' || c == ')') && depth > 0) --depth;
      if (c == ',' && depth == 0) has_comma = true;
    }
  }
  ins.operands = split(has_comma);
  return ins;
}

}  // namespace blockpair
