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

// Disassembler-neutral program dump: JSON schema validation, serialization
// and the sanitize pass that drops external (body-less) functions.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "blockpair/error.hpp"
#include "blockpair/types.hpp"

namespace blockpair {

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "/" + key, "expected string");
  return v.get<std::string>();
}

inline bool require_bool(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_boolean()) throw SchemaError(path + "/" + key, "expected boolean");
  return v.get<bool>();
}

inline const json& require_array(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw SchemaError(path + "/" + key, "expected array");
  return v;
}

inline Address require_hex(const json& obj, const char* key, const std::string& path) {
  std::string text = require_string(obj, key, path);
  auto value = parse_hex(text);
  if (!value) throw SchemaError(path + "/" + key, "malformed hex address '" + text + "'");
  return *value;
}

inline BuildConfig parse_config(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected object");
  BuildConfig cfg;
  std::string isa = require_string(j, "isa", path);
  std::string compiler = require_string(j, "compiler", path);
  std::string opt = require_string(j, "opt_level", path);
  auto i = parse_isa(isa);
  if (!i) throw SchemaError(path + "/isa", "unknown ISA '" + isa + "'");
  auto c = parse_compiler(compiler);
  if (!c) throw SchemaError(path + "/compiler", "unknown compiler '" + compiler + "'");
  auto o = parse_opt_level(opt);
  if (!o) throw SchemaError(path + "/opt_level", "unknown optimization level '" + opt + "'");
  cfg.isa = *i;
  cfg.compiler = *c;
  cfg.opt_level = *o;
  cfg.program_name = require_string(j, "program", path);
  if (cfg.program_name.empty()) throw SchemaError(path + "/program", "empty program name");
  cfg.binary_path = require_string(j, "binary_path", path);
  return cfg;
}

inline Instruction parse_instruction(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected object");
  Instruction ins;
  ins.address = require_hex(j, "addr", path);
  ins.mnemonic = require_string(j, "mnemonic", path);
  if (ins.mnemonic.empty()) throw SchemaError(path + "/mnemonic", "empty mnemonic");
  const json& ops = require_array(j, "operands", path);
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (!ops[k].is_string())
      throw SchemaError(path + "/operands/" + std::to_string(k), "expected string");
    ins.operands.push_back(ops[k].get<std::string>());
  }
  ins.raw_text = require_string(j, "raw", path);
  if (auto it = j.find("strings"); it != j.end()) {
    if (!it->is_array()) throw SchemaError(path + "/strings", "expected array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const json& idx = (*it)[k];
      if (!idx.is_number_unsigned() || idx.get<std::size_t>() >= ins.operands.size())
        throw SchemaError(path + "/strings/" + std::to_string(k), "operand index out of range");
      ins.string_operands.push_back(idx.get<std::size_t>());
    }
    std::sort(ins.string_operands.begin(), ins.string_operands.end());
    ins.string_operands.erase(std::unique(ins.string_operands.begin(), ins.string_operands.end()),
                              ins.string_operands.end());
  }
  return ins;
}

inline BasicBlock parse_block(const json& j, const std::string& function, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected object");
  BasicBlock block;
  block.start_address = require_hex(j, "start", path);
  const json& ins = require_array(j, "instructions", path);
  if (ins.empty()) throw SchemaError(path + "/instructions", "block has no instructions");
  for (std::size_t k = 0; k < ins.size(); ++k) {
    std::string ipath = path + "/instructions/" + std::to_string(k);
    Instruction parsed = parse_instruction(ins[k], ipath);
    if (!block.instructions.empty() && parsed.address <= block.instructions.back().address)
      throw SchemaError(ipath + "/addr", "instruction addresses not strictly increasing");
    block.instructions.push_back(std::move(parsed));
  }
  if (block.instructions.front().address != block.start_address)
    throw SchemaError(path + "/start", "start does not equal the first instruction address");
  block.id = make_block_id(function, block.start_address);
  block.merged_from = {block.id};
  return block;
}

inline void check_overlap(const FunctionRecord& f) {
  std::vector<const BasicBlock*> sorted;
  for (const auto& b : f.blocks) sorted.push_back(&b);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start_address < b->start_address; });
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const BasicBlock& prev = *sorted[k - 1];
    const BasicBlock& next = *sorted[k];
    if (next.start_address <= prev.instructions.back().address)
      throw OverlapError(f.name, "block " + format_hex(next.start_address) +
                                     " starts inside block " + format_hex(prev.start_address));
  }
}

}  // namespace detail

// Validates a JSON document against the dump schema. `origin` prefixes the
// location in error messages (usually the file path).
inline ProgramDump parse_dump_json(const nlohmann::json& doc, const std::string& origin = "") {
  using detail::require_array;
  const std::string root = origin + "#";
  if (!doc.is_object()) throw SchemaError(root, "top level must be an object");

  ProgramDump dump;
  dump.config = detail::parse_config(detail::require(doc, "config", root), root + "/config");

  const auto& libs = require_array(doc, "library_functions", root);
  for (std::size_t k = 0; k < libs.size(); ++k) {
    if (!libs[k].is_string())
      throw SchemaError(root + "/library_functions/" + std::to_string(k), "expected string");
    dump.library_dictionary.insert(libs[k].get<std::string>());
  }

  std::unordered_set<std::string> seen;
  const auto& funcs = require_array(doc, "functions", root);
  for (std::size_t k = 0; k < funcs.size(); ++k) {
    const std::string path = root + "/functions/" + std::to_string(k);
    const auto& fj = funcs[k];
    if (!fj.is_object()) throw SchemaError(path, "expected object");
    FunctionRecord f;
    f.name = detail::require_string(fj, "name", path);
    if (f.name.empty()) throw SchemaError(path + "/name", "empty function name");
    if (!seen.insert(f.name).second) throw DuplicateSymbolError(f.name);
    f.entry_address = detail::require_hex(fj, "entry", path);
    f.is_external = detail::require_bool(fj, "external", path);
    f.is_library = detail::require_bool(fj, "library", path);
    const auto& blocks = require_array(fj, "blocks", path);
    if (f.is_external && !blocks.empty())
      throw SchemaError(path + "/blocks", "external function must not have blocks");
    if (f.is_library && !dump.library_dictionary.count(f.name))
      throw SchemaError(path + "/library",
                        "library function '" + f.name + "' missing from library_functions");
    for (std::size_t b = 0; b < blocks.size(); ++b)
      f.blocks.push_back(detail::parse_block(blocks[b], f.name, path + "/blocks/" + std::to_string(b)));
    detail::check_overlap(f);
    dump.functions.push_back(std::move(f));
  }
  return dump;
}

inline ProgramDump parse_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string(), "cannot open dump file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return parse_dump_json(doc, path.string());
}

inline nlohmann::ordered_json serialize_dump(const ProgramDump& dump) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["config"] = {{"isa", std::string(to_string(dump.config.isa))},
                   {"compiler", std::string(to_string(dump.config.compiler))},
                   {"opt_level", std::string(to_string(dump.config.opt_level))},
                   {"program", dump.config.program_name},
                   {"binary_path", dump.config.binary_path}};
  doc["library_functions"] = ordered_json::array();
  for (const auto& name : dump.library_dictionary) doc["library_functions"].push_back(name);
  doc["functions"] = ordered_json::array();
  for (const auto& f : dump.functions) {
    ordered_json fj;
    fj["name"] = f.name;
    fj["entry"] = format_hex(f.entry_address);
    fj["external"] = f.is_external;
    fj["library"] = f.is_library;
    fj["blocks"] = ordered_json::array();
    for (const auto& b : f.blocks) {
      ordered_json bj;
      bj["start"] = format_hex(b.start_address);
      bj["instructions"] = ordered_json::array();
      for (const auto& ins : b.instructions) {
        ordered_json ij;
        ij["addr"] = format_hex(ins.address);
        ij["mnemonic"] = ins.mnemonic;
        ij["operands"] = ins.operands;
        ij["raw"] = ins.raw_text;
        if (!ins.string_operands.empty()) ij["strings"] = ins.string_operands;
        bj["instructions"].push_back(std::move(ij));
      }
      fj["blocks"].push_back(std::move(bj));
    }
    doc["functions"].push_back(std::move(fj));
  }
  return doc;
}

// Drops external functions. The library dictionary is kept as-is so call
// normalization can still recognise calls into the removed stubs.
inline ProgramDump sanitize(const ProgramDump& dump) {
  ProgramDump out;
  out.config = dump.config;
  out.library_dictionary = dump.library_dictionary;
  for (const auto& f : dump.functions)
    if (!f.is_external) out.functions.push_back(f);
  return out;
}

}  // namespace blockpair
