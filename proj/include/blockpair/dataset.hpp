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

// Corpus assembly: positive pair records, deduplication, negative sampling,
// truncation, train/test split and summary statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockpair/bmerge.hpp"
#include "blockpair/bpair.hpp"
#include "blockpair/error.hpp"
#include "blockpair/normalize.hpp"
#include "blockpair/types.hpp"

namespace blockpair {

inline constexpr std::size_t kMaxInstructions = 100;
inline constexpr double kTrainFraction = 0.8;

struct PairRecord {
  // One rendered, normalized instruction per element.
  std::vector<std::string> left;
  std::vector<std::string> right;
  int label = 1;
  std::string program;
  std::string function;
  std::string right_function;
  BuildConfig left_config;
  BuildConfig right_config;
  std::optional<LabelSet> shared_labels;  // set iff label == 1
  LabelSet left_labels;
  LabelSet right_labels;
  std::string split;

  std::string left_text() const { return join(left); }
  std::string right_text() const { return join(right); }

  static std::string join(const std::vector<std::string>& instrs) {
    std::string out;
    for (const auto& s : instrs) {
      if (!out.empty()) {
        out += ' ';
        out += kInstructionSeparator;
        out += ' ';
      }
      out += s;
    }
    return out;
  }
};

inline nlohmann::ordered_json labels_to_json(const LabelSet& labels) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& sl : labels) arr.push_back(nlohmann::ordered_json::array({sl.file, sl.line}));
  return arr;
}

inline nlohmann::ordered_json to_json(const PairRecord& r) {
  nlohmann::ordered_json meta;
  meta["program"] = r.program;
  meta["function"] = r.function;
  if (r.label == 0) meta["right_function"] = r.right_function;
  meta["left_config"] = r.left_config.label();
  meta["right_config"] = r.right_config.label();
  meta["shared_labels"] = r.shared_labels ? labels_to_json(*r.shared_labels) : nullptr;
  meta["left_labels"] = labels_to_json(r.left_labels);
  meta["right_labels"] = labels_to_json(r.right_labels);
  if (!r.split.empty()) meta["split"] = r.split;
  nlohmann::ordered_json j;
  j["left"] = r.left_text();
  j["right"] = r.right_text();
  j["label"] = r.label;
  j["meta"] = std::move(meta);
  return j;
}

template <typename Dict>
std::vector<std::string> render_instructions(const BasicBlock& block, Isa isa, const Dict& dict) {
  std::vector<std::string> out;
  for (const auto& n : normalize_block(block, isa, dict)) out.push_back(n.str());
  return out;
}

// Builds the label-1 record for an equivalent pair. Each side is normalized
// with its own build's ISA and library dictionary.
template <typename Dict>
PairRecord make_positive(const EquivalentPair& pair, const Dict& left_dict,
                         const Dict& right_dict) {
  PairRecord r;
  r.left = render_instructions(pair.left_block, pair.left_config.isa, left_dict);
  r.right = render_instructions(pair.right_block, pair.right_config.isa, right_dict);
  r.label = 1;
  r.program = pair.left_config.program_name;
  r.function = pair.function_name;
  r.right_function = pair.function_name;
  r.left_config = pair.left_config;
  r.right_config = pair.right_config;
  r.shared_labels = pair.shared_labels;
  r.left_labels = pair.left_block.labels;
  r.right_labels = pair.right_block.labels;
  return r;
}

struct DedupResult {
  std::vector<PairRecord> records;
  std::size_t removed = 0;
};

// Drops records whose (left, right) renderings repeat an earlier record and
// sorts the survivors by rendering.
inline DedupResult dedup(std::vector<PairRecord> pairs) {
  DedupResult out;
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& r : pairs) {
    if (!seen.emplace(r.left_text(), r.right_text()).second) {
      ++out.removed;
      continue;
    }
    out.records.push_back(std::move(r));
  }
  std::stable_sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
    return std::pair(a.left_text(), a.right_text()) < std::pair(b.left_text(), b.right_text());
  });
  return out;
}

// Deterministic uniform index in [0, n) (rejection sampling; the standard
// distributions are not portable across library implementations).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

struct PoolBlock {
  std::vector<std::string> instructions;
  LabelSet labels;
  std::string program;
  std::string function;
  BuildConfig config;
};

inline constexpr int kNegativeRetries = 64;

// One negative per positive: the positive's left side against a uniformly
// drawn pool block whose labels are disjoint from the left labels and whose
// rendering differs from the true right side.
inline std::vector<PairRecord> sample_negatives(std::span<const PairRecord> positives,
                                                std::span<const PoolBlock> pool,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool_text;
  pool_text.reserve(pool.size());
  for (const auto& b : pool) pool_text.push_back(PairRecord::join(b.instructions));

  std::vector<PairRecord> out;
  out.reserve(positives.size());
  for (const auto& p : positives) {
    const std::string right_text = p.right_text();
    auto valid = [&](std::size_t k) {
      return !pool[k].labels.intersects(p.left_labels) && pool_text[k] != right_text;
    };
    std::optional<std::size_t> pick;
    for (int attempt = 0; attempt < kNegativeRetries && !pool.empty() && !pick; ++attempt) {
      std::size_t k = uniform_index(rng, pool.size());
      if (valid(k)) pick = k;
    }
    if (!pick) {
      // Sparse valid set: draw uniformly among the valid candidates instead.
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < pool.size(); ++k)
        if (valid(k)) candidates.push_back(k);
      if (candidates.empty())
        throw PoolExhaustedError("no negative partner for a block of function '" + p.function +
                                 "' (pool of " + std::to_string(pool.size()) + " blocks)");
      pick = candidates[uniform_index(rng, candidates.size())];
    }
    const PoolBlock& b = pool[*pick];
    PairRecord neg;
    neg.left = p.left;
    neg.right = b.instructions;
    neg.label = 0;
    neg.program = p.program;
    neg.function = p.function;
    neg.right_function = b.function;
    neg.left_config = p.left_config;
    neg.right_config = b.config;
    neg.left_labels = p.left_labels;
    neg.right_labels = b.labels;
    out.push_back(std::move(neg));
  }
  return out;
}

struct SplitResult {
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;
  std::size_t truncated_sides = 0;
};

inline std::size_t train_size(std::size_t n, double train_frac) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_frac));
}

// Truncates each side to `max_len` instructions, then shuffles with `seed`
// and splits. With `by_function` every (program, function) group lands
// wholly in one split; the train side takes groups until it reaches the
// target size.
inline SplitResult truncate_and_split(std::vector<PairRecord> records,
                                      std::size_t max_len = kMaxInstructions,
                                      double train_frac = kTrainFraction, std::uint64_t seed = 0,
                                      bool by_function = false) {
  SplitResult out;
  for (auto& r : records) {
    for (auto* side : {&r.left, &r.right}) {
      if (side->size() > max_len) {
        side->resize(max_len);
        ++out.truncated_sides;
      }
    }
  }
  std::mt19937_64 rng(seed);
  const std::size_t target = train_size(records.size(), train_frac);

  if (!by_function) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, rng);
    for (std::size_t k = 0; k < order.size(); ++k) {
      PairRecord r = std::move(records[order[k]]);
      r.split = k < target ? "train" : "test";
      (k < target ? out.train : out.test).push_back(std::move(r));
    }
    return out;
  }

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < records.size(); ++k)
    groups[{records[k].program, records[k].function}].push_back(k);
  std::vector<std::vector<std::size_t>> ordered;
  for (auto& [key, members] : groups) ordered.push_back(std::move(members));
  seeded_shuffle(ordered, rng);
  for (const auto& members : ordered) {
    const bool to_train = out.train.size() < target;
    for (std::size_t k : members) {
      PairRecord r = std::move(records[k]);
      r.split = to_train ? "train" : "test";
      (to_train ? out.train : out.test).push_back(std::move(r));
    }
  }
  return out;
}

// Per-build-configuration counters collected while a dump moves through the
// pipeline.
struct ConfigArtifacts {
  BuildConfig config;
  std::size_t functions_ingested = 0;
  std::size_t external_functions = 0;
  std::size_t blocks_ingested = 0;
  std::size_t blocks_annotated = 0;
  std::vector<BmergeFunctionStats> bmerge;
};

struct RunArtifacts {
  std::vector<ConfigArtifacts> configs;
  // Keyed by "<left label>|<right label>".
  std::map<std::string, std::size_t> pairs_per_config_pair;
  std::size_t positives_before_dedup = 0;
  std::size_t dedup_removed = 0;
  std::size_t negatives = 0;
  std::size_t truncated_sides = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t left_only_functions = 0;
  std::size_t right_only_functions = 0;
  std::size_t one_sided_components = 0;
};

inline constexpr int kRatioBins = 10;

struct ConfigStats {
  std::string config;
  std::string program;
  std::size_t functions = 0;
  std::size_t bmerge_affected_functions = 0;
  double bmerge_affected_function_ratio = 0.0;
  std::size_t blocks_before_bmerge = 0;
  std::size_t blocks_after_bmerge = 0;
  double mean_block_change_ratio = 0.0;
  // Functions per block-change-ratio bin: [0,0.1), ..., [0.9,1.0].
  std::vector<std::size_t> block_change_ratio_histogram = std::vector<std::size_t>(kRatioBins, 0);
  std::vector<double> block_change_ratios;
};

struct CorpusStats {
  std::vector<ConfigStats> configs;
  std::map<std::string, std::size_t> pairs_per_config_pair;
  std::size_t positives_before_dedup = 0;
  std::size_t dedup_removed = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t truncated_sides = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t left_only_functions = 0;
  std::size_t right_only_functions = 0;
  std::size_t one_sided_components = 0;
};

inline CorpusStats compute_stats(const RunArtifacts& run) {
  CorpusStats s;
  for (const auto& c : run.configs) {
    ConfigStats cs;
    cs.config = c.config.label();
    cs.program = c.config.program_name;
    cs.functions = c.bmerge.size();
    double ratio_sum = 0.0;
    for (const auto& f : c.bmerge) {
      cs.blocks_before_bmerge += f.blocks_before;
      cs.blocks_after_bmerge += f.blocks_after;
      if (f.changed()) ++cs.bmerge_affected_functions;
      const double ratio = f.blocks_before == 0
                               ? 1.0
                               : static_cast<double>(f.blocks_after) /
                                     static_cast<double>(f.blocks_before);
      cs.block_change_ratios.push_back(ratio);
      ratio_sum += ratio;
      int bin = std::min(kRatioBins - 1, static_cast<int>(ratio * kRatioBins));
      ++cs.block_change_ratio_histogram[static_cast<std::size_t>(bin)];
    }
    if (cs.functions > 0) {
      cs.bmerge_affected_function_ratio =
          static_cast<double>(cs.bmerge_affected_functions) / static_cast<double>(cs.functions);
      cs.mean_block_change_ratio = ratio_sum / static_cast<double>(cs.functions);
    }
    s.configs.push_back(std::move(cs));
  }
  s.pairs_per_config_pair = run.pairs_per_config_pair;
  s.positives_before_dedup = run.positives_before_dedup;
  s.dedup_removed = run.dedup_removed;
  s.positives = run.positives_before_dedup - run.dedup_removed;
  s.negatives = run.negatives;
  s.truncated_sides = run.truncated_sides;
  s.train = run.train;
  s.test = run.test;
  s.left_only_functions = run.left_only_functions;
  s.right_only_functions = run.right_only_functions;
  s.one_sided_components = run.one_sided_components;
  return s;
}

inline nlohmann::ordered_json to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["configs"] = nlohmann::ordered_json::array();
  for (const auto& c : s.configs) {
    j["configs"].push_back({{"program", c.program},
                            {"config", c.config},
                            {"functions", c.functions},
                            {"bmerge_affected_functions", c.bmerge_affected_functions},
                            {"bmerge_affected_function_ratio", c.bmerge_affected_function_ratio},
                            {"blocks_before_bmerge", c.blocks_before_bmerge},
                            {"blocks_after_bmerge", c.blocks_after_bmerge},
                            {"mean_block_change_ratio", c.mean_block_change_ratio},
                            {"block_change_ratio_histogram", c.block_change_ratio_histogram}});
  }
  j["pairs_per_config_pair"] = s.pairs_per_config_pair;
  j["positives_before_dedup"] = s.positives_before_dedup;
  j["dedup_removed"] = s.dedup_removed;
  j["positives"] = s.positives;
  j["negatives"] = s.negatives;
  j["truncated_sides"] = s.truncated_sides;
  j["train"] = s.train;
  j["test"] = s.test;
  j["left_only_functions"] = s.left_only_functions;
  j["right_only_functions"] = s.right_only_functions;
  j["one_sided_components"] = s.one_sided_components;
  return j;
}

}  // namespace blockpair
