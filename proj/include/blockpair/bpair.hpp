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

// Cross-build block pairing: blocks of the same function from two builds
// are connected whenever their label sets intersect, and each connected
// component that spans both builds becomes one equivalent pair.

#pragma once

#include <algorithm>
#include <cctype>
#include <tuple>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockpair/bmerge.hpp"
#include "blockpair/error.hpp"
#include "blockpair/types.hpp"

namespace blockpair {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

struct BipartiteGraph {
  std::vector<BasicBlock> left;
  std::vector<BasicBlock> right;
  // (left index, right index), lexicographically sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

inline BipartiteGraph build_graph(std::span<const BasicBlock> left,
                                  std::span<const BasicBlock> right) {
  BipartiteGraph g;
  g.left.assign(left.begin(), left.end());
  g.right.assign(right.begin(), right.end());
  for (std::size_t u = 0; u < left.size(); ++u)
    for (std::size_t v = 0; v < right.size(); ++v)
      if (left[u].labels.intersects(right[v].labels)) g.edges.emplace_back(u, v);
  return g;
}

// Component index per vertex; left vertices are [0, |left|), right vertices
// follow. Components are numbered in order of their lowest vertex.
inline std::vector<std::size_t> connected_components(const BipartiteGraph& g) {
  const std::size_t n = g.left.size() + g.right.size();
  DisjointSet ds(n);
  for (auto [u, v] : g.edges) ds.unite(u, g.left.size() + v);
  std::vector<std::size_t> comp(n);
  std::map<std::size_t, std::size_t> numbering;
  for (std::size_t x = 0; x < n; ++x) {
    auto [it, inserted] = numbering.emplace(ds.find(x), numbering.size());
    comp[x] = it->second;
  }
  return comp;
}

enum class Side { kLeft, kRight };

inline std::string_view to_string(Side s) { return s == Side::kLeft ? "left" : "right"; }

struct EquivalentPair {
  BasicBlock left_block;
  BasicBlock right_block;
  std::string function_name;
  BuildConfig left_config;
  BuildConfig right_config;
  LabelSet shared_labels;
};

// A component whose vertices all come from one build (for example code the
// optimizer removed on the other side). Never turned into a pair.
struct OneSidedComponent {
  std::string function;
  Side side = Side::kLeft;
  std::vector<std::string> block_ids;
};

struct BpairResult {
  std::vector<EquivalentPair> pairs;
  std::vector<OneSidedComponent> one_sided;
};

// Pairs are ordered by the start address of their left block; one-sided
// reports by their first block id.
inline BpairResult bpair(std::span<const BasicBlock> left, std::span<const BasicBlock> right,
                         const std::string& function = {}, const BuildConfig& left_config = {},
                         const BuildConfig& right_config = {}) {
  BipartiteGraph g = build_graph(left, right);
  std::vector<std::size_t> comp = connected_components(g);
  std::size_t count = 0;
  for (std::size_t c : comp) count = std::max(count, c + 1);

  std::vector<std::vector<BasicBlock>> lhs(count), rhs(count);
  for (std::size_t u = 0; u < left.size(); ++u) lhs[comp[u]].push_back(left[u]);
  for (std::size_t v = 0; v < right.size(); ++v) rhs[comp[left.size() + v]].push_back(right[v]);

  auto by_address = [](const BasicBlock& a, const BasicBlock& b) {
    return a.start_address < b.start_address;
  };

  BpairResult result;
  for (std::size_t c = 0; c < count; ++c) {
    auto& ls = lhs[c];
    auto& rs = rhs[c];
    std::sort(ls.begin(), ls.end(), by_address);
    std::sort(rs.begin(), rs.end(), by_address);
    if (ls.empty() || rs.empty()) {
      const bool left_side = !ls.empty();
      for (const auto& b : left_side ? ls : rs) {
        result.one_sided.push_back(
            {function, left_side ? Side::kLeft : Side::kRight, b.merged_from});
      }
      continue;
    }
    EquivalentPair pair;
    pair.left_block = fold_blocks(ls);
    pair.right_block = fold_blocks(rs);
    pair.function_name = function;
    pair.left_config = left_config;
    pair.right_config = right_config;
    pair.shared_labels = pair.left_block.labels.intersected(pair.right_block.labels);
    result.pairs.push_back(std::move(pair));
  }
  std::sort(result.pairs.begin(), result.pairs.end(), [](const auto& a, const auto& b) {
    return a.left_block.start_address < b.left_block.start_address;
  });
  std::sort(result.one_sided.begin(), result.one_sided.end(), [](const auto& a, const auto& b) {
    return std::tie(a.side, a.block_ids) < std::tie(b.side, b.block_ids);
  });
  return result;
}

// Cross-build function identity: the symbol name with a trailing symbol
// version ("@GLIBC_2.2.5", "@@GCC_3.0") removed.
inline std::string function_key(std::string_view name) {
  auto at = name.find('@');
  if (at == std::string_view::npos || at == 0) return std::string(name);
  std::string_view rest = name.substr(at + 1);
  if (!rest.empty() && rest.front() == '@') rest.remove_prefix(1);
  if (rest.empty() || !(rest.front() >= 'A' && rest.front() <= 'Z')) return std::string(name);
  for (char c : rest)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
      return std::string(name);
  return std::string(name.substr(0, at));
}

struct UnmatchedReport {
  std::vector<std::string> left_only_functions;
  std::vector<std::string> right_only_functions;
  std::vector<OneSidedComponent> one_sided_components;

  void append(const UnmatchedReport& other) {
    left_only_functions.insert(left_only_functions.end(), other.left_only_functions.begin(),
                               other.left_only_functions.end());
    right_only_functions.insert(right_only_functions.end(), other.right_only_functions.begin(),
                                other.right_only_functions.end());
    one_sided_components.insert(one_sided_components.end(), other.one_sided_components.begin(),
                                other.one_sided_components.end());
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["left_only_functions"] = left_only_functions;
    j["right_only_functions"] = right_only_functions;
    j["one_sided_components"] = nlohmann::ordered_json::array();
    for (const auto& c : one_sided_components) {
      j["one_sided_components"].push_back({{"function", c.function},
                                           {"side", std::string(to_string(c.side))},
                                           {"block_ids", c.block_ids}});
    }
    return j;
  }
};

struct ProgramPairing {
  std::vector<EquivalentPair> pairs;
  UnmatchedReport unmatched;
};

// Joins two annotated, bmerged dumps on function identity and pairs every
// shared function. Output follows the left dump's function order.
inline ProgramPairing pair_programs(const ProgramDump& left, const ProgramDump& right) {
  if (left.config == right.config)
    throw ValidationError("cannot pair a build configuration with itself: " + left.config.label());

  auto index = [](const ProgramDump& d) {
    std::map<std::string, const FunctionRecord*> by_key;
    for (const auto& f : d.functions) {
      if (!by_key.emplace(function_key(f.name), &f).second)
        throw DuplicateSymbolError(function_key(f.name));
    }
    return by_key;
  };
  auto right_index = index(right);
  auto left_index = index(left);

  ProgramPairing out;
  for (const auto& f : left.functions) {
    auto it = right_index.find(function_key(f.name));
    if (it == right_index.end()) {
      out.unmatched.left_only_functions.push_back(f.name);
      continue;
    }
    BpairResult r = bpair(f.blocks, it->second->blocks, function_key(f.name), left.config,
                          right.config);
    for (auto& p : r.pairs) out.pairs.push_back(std::move(p));
    for (auto& c : r.one_sided) out.unmatched.one_sided_components.push_back(std::move(c));
  }
  for (const auto& f : right.functions)
    if (!left_index.count(function_key(f.name)))
      out.unmatched.right_only_functions.push_back(f.name);
  return out;
}

}  // namespace blockpair
