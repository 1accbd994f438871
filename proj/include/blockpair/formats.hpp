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

// File formats shared with downstream consumers: the pairs.jsonl corpus
// written by the pipeline and the metrics.json report a pair classifier
// writes back.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockpair/error.hpp"

namespace blockpair {

namespace detail {

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw SchemaError(path, what);
}

inline void check_label_list(const nlohmann::json& j, const std::string& path) {
  require(j.is_array(), path, "expected an array of [file, line]");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& e = j[k];
    const std::string at = path + "/" + std::to_string(k);
    require(e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_number_unsigned() &&
                e[1].get<std::uint64_t>() > 0,
            at, "expected [file, positive line]");
  }
}

}  // namespace detail

// Checks one decoded pairs.jsonl line. `path` prefixes error locations.
inline void validate_pair_record(const nlohmann::json& j, const std::string& path = "") {
  using detail::require;
  require(j.is_object(), path, "record must be an object");
  for (const char* side : {"left", "right"}) {
    auto it = j.find(side);
    require(it != j.end() && it->is_string() && !it->get<std::string>().empty(), path + "/" + side,
            "expected a non-empty rendering");
  }
  auto label = j.find("label");
  require(label != j.end() && label->is_number_integer() &&
              (label->get<int>() == 0 || label->get<int>() == 1),
          path + "/label", "expected 0 or 1");
  auto meta = j.find("meta");
  require(meta != j.end() && meta->is_object(), path + "/meta", "expected an object");
  for (const char* key : {"program", "function", "left_config", "right_config"}) {
    auto it = meta->find(key);
    require(it != meta->end() && it->is_string(), path + "/meta/" + key, "expected a string");
  }
  for (const char* key : {"left_labels", "right_labels"}) {
    auto it = meta->find(key);
    require(it != meta->end(), path + "/meta/" + key, "missing");
    detail::check_label_list(*it, path + "/meta/" + key);
  }
  auto shared = meta->find("shared_labels");
  require(shared != meta->end(), path + "/meta/shared_labels", "missing");
  if (label->get<int>() == 1) {
    detail::check_label_list(*shared, path + "/meta/shared_labels");
    require(!shared->empty(), path + "/meta/shared_labels", "positive record shares no line");
  } else {
    require(shared->is_null(), path + "/meta/shared_labels", "negative record must carry null");
  }
}

struct CorpusCheck {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  // Negative records whose two sides share a source line.
  std::size_t unsound_negatives = 0;

  bool balanced() const { return positives == negatives; }
};

// Validates every line of a pairs.jsonl file and checks negatives against
// their label sets.
inline CorpusCheck verify_pairs_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file.string(), "cannot open");
  CorpusCheck c;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string at = file.string() + ":" + std::to_string(n);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(at, e.what());
    }
    validate_pair_record(j, at);
    const auto& meta = j["meta"];
    if (meta.contains("split")) (meta["split"] == "train" ? c.train : c.test) += 1;
    if (j["label"] == 1) {
      ++c.positives;
      continue;
    }
    ++c.negatives;
    std::set<std::pair<std::string, std::uint64_t>> left;
    for (const auto& l : meta["left_labels"]) left.emplace(l[0], l[1]);
    for (const auto& l : meta["right_labels"]) {
      if (left.count({l[0], l[1]})) {
        ++c.unsound_negatives;
        break;
      }
    }
  }
  return c;
}

// Evaluation report of a pair classifier: area under the ROC curve and the
// curve itself as (false positive rate, true positive rate) points.
struct Metrics {
  double auc = 0.0;
  std::vector<std::pair<double, double>> roc;
};

inline nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["auc"] = m.auc;
  j["roc"] = nlohmann::ordered_json::array();
  for (const auto& [fpr, tpr] : m.roc) j["roc"].push_back({fpr, tpr});
  return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j, const std::string& path = "") {
  using detail::require;
  require(j.is_object(), path, "metrics must be an object");
  auto auc = j.find("auc");
  require(auc != j.end() && auc->is_number(), path + "/auc", "expected a number");
  Metrics m;
  m.auc = auc->get<double>();
  require(std::isfinite(m.auc) && m.auc >= 0.0 && m.auc <= 1.0, path + "/auc", "outside [0, 1]");
  auto roc = j.find("roc");
  require(roc != j.end() && roc->is_array(), path + "/roc", "expected an array");
  for (std::size_t k = 0; k < roc->size(); ++k) {
    const auto& p = (*roc)[k];
    const std::string at = path + "/roc/" + std::to_string(k);
    require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(), at,
            "expected [fpr, tpr]");
    const double fpr = p[0].get<double>();
    const double tpr = p[1].get<double>();
    require(fpr >= 0.0 && fpr <= 1.0 && tpr >= 0.0 && tpr <= 1.0, at, "rate outside [0, 1]");
    if (!m.roc.empty())
      require(fpr >= m.roc.back().first && tpr >= m.roc.back().second, at, "curve is not monotone");
    m.roc.emplace_back(fpr, tpr);
  }
  return m;
}

inline Metrics load_metrics(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file.string(), "cannot open");
  try {
    return metrics_from_json(nlohmann::json::parse(in), file.string());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(file.string(), e.what());
  }
}

}  // namespace blockpair
