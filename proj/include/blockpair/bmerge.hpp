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

// Within-build block consolidation: blocks of one function whose label sets
// are equal or subset-related are merged until every surviving label set is
// unique and incomparable with the others.

#pragma once

#include <algorithm>
#include <iterator>
#include <map>
#include <span>
#include <vector>

#include "blockpair/error.hpp"
#include "blockpair/types.hpp"

namespace blockpair {

// Merges two distinct blocks. The result is keyed by the lower-address block;
// instructions stay in address order regardless of argument order.
inline BasicBlock merge_blocks(const BasicBlock& p, const BasicBlock& q) {
  const BasicBlock& anchor = p.start_address <= q.start_address ? p : q;
  const BasicBlock& other = &anchor == &p ? q : p;
  BasicBlock out;
  out.id = anchor.id;
  out.start_address = anchor.start_address;
  out.instructions.reserve(p.instructions.size() + q.instructions.size());
  std::merge(anchor.instructions.begin(), anchor.instructions.end(), other.instructions.begin(),
             other.instructions.end(), std::back_inserter(out.instructions),
             [](const Instruction& a, const Instruction& b) { return a.address < b.address; });
  out.labels = p.labels.united(q.labels);
  std::set_union(anchor.merged_from.begin(), anchor.merged_from.end(), other.merged_from.begin(),
                 other.merged_from.end(), std::back_inserter(out.merged_from));
  return out;
}

// Folds a non-empty range of blocks with merge_blocks.
inline BasicBlock fold_blocks(std::span<const BasicBlock> blocks) {
  BasicBlock acc = blocks.front();
  for (std::size_t k = 1; k < blocks.size(); ++k) acc = merge_blocks(acc, blocks[k]);
  return acc;
}

// True when no two label sets are equal or in a subset relation.
inline bool is_bmerge_normal_form(std::span<const BasicBlock> blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = 0; j < blocks.size(); ++j)
      if (i != j && blocks[i].labels.subset_of(blocks[j].labels)) return false;
  return true;
}

// Result is sorted by start address.
//
// Equal label sets collapse first into one group per distinct set. Every
// group whose set is a strict subset of some other set is then absorbed by a
// maximal superset group; with several incomparable maximal supersets the
// group whose lowest original start address is smallest wins. Absorption
// never changes a superset's labels, so the maximal sets are fixed up front
// and the outcome does not depend on input order.
inline std::vector<BasicBlock> bmerge(std::span<const BasicBlock> blocks) {
  for (const auto& b : blocks)
    if (b.labels.empty()) throw EmptyLabelError(b.id);

  std::map<LabelSet, std::vector<BasicBlock>> by_labels;
  for (const auto& b : blocks) by_labels[b.labels].push_back(b);

  struct Group {
    BasicBlock block;
    bool maximal = true;
  };
  std::vector<Group> groups;
  groups.reserve(by_labels.size());
  for (auto& [labels, members] : by_labels) groups.push_back({fold_blocks(members), true});

  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = 0; j < groups.size(); ++j)
      if (i != j && groups[i].block.labels.size() < groups[j].block.labels.size() &&
          groups[i].block.labels.subset_of(groups[j].block.labels)) {
        groups[i].maximal = false;
        break;
      }

  std::vector<std::size_t> target(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    target[i] = i;
    if (groups[i].maximal) continue;
    std::size_t best = groups.size();
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (!groups[j].maximal || !groups[i].block.labels.subset_of(groups[j].block.labels)) continue;
      if (best == groups.size() ||
          groups[j].block.start_address < groups[best].block.start_address)
        best = j;
    }
    target[i] = best;
  }

  std::vector<BasicBlock> out;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    if (!groups[j].maximal) continue;
    BasicBlock acc = groups[j].block;
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (i != j && target[i] == j) acc = merge_blocks(acc, groups[i].block);
    out.push_back(std::move(acc));
  }
  std::sort(out.begin(), out.end(),
            [](const BasicBlock& a, const BasicBlock& b) { return a.start_address < b.start_address; });
  return out;
}

struct BmergeFunctionStats {
  std::string function;
  std::size_t blocks_before = 0;
  std::size_t blocks_after = 0;
  bool changed() const { return blocks_after != blocks_before; }
};

// Applies bmerge to every function of an annotated dump.
inline ProgramDump bmerge_dump(const ProgramDump& dump,
                               std::vector<BmergeFunctionStats>* stats = nullptr) {
  ProgramDump out;
  out.config = dump.config;
  out.library_dictionary = dump.library_dictionary;
  for (const auto& f : dump.functions) {
    FunctionRecord merged = f;
    merged.blocks = bmerge(f.blocks);
    if (stats) stats->push_back({f.name, f.blocks.size(), merged.blocks.size()});
    out.functions.push_back(std::move(merged));
  }
  return out;
}

}  // namespace blockpair
