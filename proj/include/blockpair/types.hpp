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

#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "blockpair/error.hpp"

namespace blockpair {

using Address = std::uint64_t;

enum class Isa { kX86, kX86_64, kArm32, kAArch64 };
enum class Compiler { kGcc, kClang };
enum class OptLevel { kO0, kO1, kO2, kO3 };

inline std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kX86: return "x86";
    case Isa::kX86_64: return "x86_64";
    case Isa::kArm32: return "arm32";
    case Isa::kAArch64: return "aarch64";
  }
  return "?";
}

inline std::string_view to_string(Compiler c) { return c == Compiler::kGcc ? "gcc" : "clang"; }

inline std::string_view to_string(OptLevel o) {
  static constexpr std::string_view kNames[] = {"O0", "O1", "O2", "O3"};
  return kNames[static_cast<int>(o)];
}

inline std::optional<Isa> parse_isa(std::string_view s) {
  if (s == "x86") return Isa::kX86;
  if (s == "x86_64") return Isa::kX86_64;
  if (s == "arm32") return Isa::kArm32;
  if (s == "aarch64") return Isa::kAArch64;
  return std::nullopt;
}

inline std::optional<Compiler> parse_compiler(std::string_view s) {
  if (s == "gcc") return Compiler::kGcc;
  if (s == "clang") return Compiler::kClang;
  return std::nullopt;
}

inline std::optional<OptLevel> parse_opt_level(std::string_view s) {
  if (s == "O0") return OptLevel::kO0;
  if (s == "O1") return OptLevel::kO1;
  if (s == "O2") return OptLevel::kO2;
  if (s == "O3") return OptLevel::kO3;
  return std::nullopt;
}

// One coordinate of the build matrix. (isa, compiler, opt_level, program_name)
// identifies a dump within a run; binary_path is informational.
struct BuildConfig {
  Isa isa = Isa::kX86_64;
  Compiler compiler = Compiler::kGcc;
  OptLevel opt_level = OptLevel::kO0;
  std::string program_name;
  std::string binary_path;

  // "x86_64-gcc-O0"; used in run directory names and stats keys.
  std::string label() const {
    std::string out(to_string(isa));
    out += '-';
    out += to_string(compiler);
    out += '-';
    out += to_string(opt_level);
    return out;
  }

  auto key() const { return std::tie(isa, compiler, opt_level, program_name); }
  friend bool operator==(const BuildConfig& a, const BuildConfig& b) { return a.key() == b.key(); }
  friend bool operator<(const BuildConfig& a, const BuildConfig& b) { return a.key() < b.key(); }
};

// Lowercase, 0x-prefixed, no leading zeros ("0x0" for zero).
inline std::string format_hex(Address value) {
  char buf[24] = {'0', 'x'};
  auto [end, ec] = std::to_chars(buf + 2, buf + sizeof(buf), value, 16);
  return std::string(buf, end);
}

// Strict inverse of format_hex; rejects uppercase digits and leading zeros.
inline std::optional<Address> parse_hex(std::string_view text) {
  if (text.size() < 3 || text.substr(0, 2) != "0x") return std::nullopt;
  std::string_view digits = text.substr(2);
  if (digits.size() > 16) return std::nullopt;
  if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
  for (char c : digits) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return std::nullopt;
  }
  Address value = 0;
  std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
  return value;
}

struct SourceLine {
  std::string file;
  std::uint32_t line = 0;

  friend auto operator<=>(const SourceLine&, const SourceLine&) = default;
  friend bool operator==(const SourceLine&, const SourceLine&) = default;

  std::string str() const { return file + ":" + std::to_string(line); }
};

// Set of source lines kept as a sorted, duplicate-free vector so subset and
// intersection tests are linear merges.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<SourceLine> lines) {
    for (const auto& l : lines) insert(l);
  }

  void insert(const SourceLine& line) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), line);
    if (it == entries_.end() || *it != line) entries_.insert(it, line);
  }

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<SourceLine>& entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  bool contains(const SourceLine& line) const {
    return std::binary_search(entries_.begin(), entries_.end(), line);
  }

  // Non-strict: a set is a subset of itself.
  bool subset_of(const LabelSet& other) const {
    return size() <= other.size() &&
           std::includes(other.entries_.begin(), other.entries_.end(), entries_.begin(),
                         entries_.end());
  }

  bool intersects(const LabelSet& other) const {
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        return true;
      }
    }
    return false;
  }

  LabelSet united(const LabelSet& other) const {
    LabelSet out;
    std::set_union(entries_.begin(), entries_.end(), other.entries_.begin(), other.entries_.end(),
                   std::back_inserter(out.entries_));
    return out;
  }

  LabelSet intersected(const LabelSet& other) const {
    LabelSet out;
    std::set_intersection(entries_.begin(), entries_.end(), other.entries_.begin(),
                          other.entries_.end(), std::back_inserter(out.entries_));
    return out;
  }

  friend auto operator<=>(const LabelSet&, const LabelSet&) = default;
  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<SourceLine> entries_;
};

struct Instruction {
  Address address = 0;
  std::string mnemonic;
  std::vector<std::string> operands;
  std::string raw_text;
  // Indices into `operands` that the exporter marked as string literals.
  std::vector<std::size_t> string_operands;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct BasicBlock {
  std::string id;
  Address start_address = 0;
  std::vector<Instruction> instructions;
  LabelSet labels;
  // Ids of the original blocks this block was built from, sorted.
  std::vector<std::string> merged_from;

  friend bool operator==(const BasicBlock&, const BasicBlock&) = default;

  Address end_address() const {
    return instructions.empty() ? start_address : instructions.back().address + 1;
  }
};

// Opaque, per-dump unique block id.
inline std::string make_block_id(std::string_view function, Address start) {
  std::string id(function);
  id += '@';
  id += format_hex(start);
  return id;
}

struct FunctionRecord {
  std::string name;
  Address entry_address = 0;
  std::vector<BasicBlock> blocks;
  bool is_external = false;
  bool is_library = false;

  friend bool operator==(const FunctionRecord&, const FunctionRecord&) = default;
};

struct ProgramDump {
  BuildConfig config;
  std::vector<FunctionRecord> functions;
  std::set<std::string> library_dictionary;

  friend bool operator==(const ProgramDump& a, const ProgramDump& b) {
    return a.config == b.config && a.config.binary_path == b.config.binary_path &&
           a.functions == b.functions && a.library_dictionary == b.library_dictionary;
  }

  std::size_t block_count() const {
    std::size_t n = 0;
    for (const auto& f : functions) n += f.blocks.size();
    return n;
  }

  std::size_t instruction_count() const {
    std::size_t n = 0;
    for (const auto& f : functions)
      for (const auto& b : f.blocks) n += b.instructions.size();
    return n;
  }

  const FunctionRecord* find(std::string_view name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }
};

}  // namespace blockpair
