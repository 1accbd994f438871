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

#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "blockpair.hpp"
#include "e2e.hpp"

namespace blockpair {
namespace {

using testing::data_path;
using testing::TempDir;

nlohmann::json first_record(int label) {
  for (const auto& r : testing::read_jsonl(data_path("e2e/golden/pairs.jsonl")))
    if (r["label"] == label) return r;
  throw std::runtime_error("fixture lacks a record with that label");
}

std::string schema_path(const nlohmann::json& j) {
  try {
    validate_pair_record(j);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "";
}

TEST(PairRecordSchemaTest, FixtureRecordsValidate) {
  for (const auto& r : testing::read_jsonl(data_path("e2e/golden/pairs.jsonl")))
    EXPECT_NO_THROW(validate_pair_record(r)) << r.dump();
}

TEST(PairRecordSchemaTest, RejectsBrokenRecords) {
  auto pos = first_record(1);
  auto neg = first_record(0);

  auto j = pos;
  j["label"] = 2;
  EXPECT_EQ(schema_path(j), "/label");
  j = pos;
  j["left"] = "";
  EXPECT_EQ(schema_path(j), "/left");
  j = pos;
  j["meta"]["shared_labels"] = nullptr;
  EXPECT_EQ(schema_path(j), "/meta/shared_labels");
  j = pos;
  j["meta"]["shared_labels"] = nlohmann::json::array();
  EXPECT_EQ(schema_path(j), "/meta/shared_labels");
  j = neg;
  j["meta"]["shared_labels"] = pos["meta"]["shared_labels"];
  EXPECT_EQ(schema_path(j), "/meta/shared_labels");
  j = neg;
  j["meta"]["left_labels"][0][1] = 0;
  EXPECT_EQ(schema_path(j), "/meta/left_labels/0");
  j = pos;
  j["meta"].erase("right_config");
  EXPECT_EQ(schema_path(j), "/meta/right_config");
}

TEST(VerifyPairsTest, FixtureIsBalancedAndSound) {
  CorpusCheck c = verify_pairs_file(data_path("e2e/golden/pairs.jsonl"));
  EXPECT_GT(c.positives, 0u);
  EXPECT_TRUE(c.balanced());
  EXPECT_EQ(c.unsound_negatives, 0u);
  EXPECT_EQ(c.train + c.test, c.positives + c.negatives);
}

TEST(VerifyPairsTest, FindsNegativeSharingALine) {
  TempDir tmp;
  auto neg = first_record(0);
  neg["meta"]["right_labels"].push_back(neg["meta"]["left_labels"][0]);
  std::ofstream(tmp.path() / "p.jsonl") << first_record(1).dump() << "\n" << neg.dump() << "\n";
  CorpusCheck c = verify_pairs_file(tmp.path() / "p.jsonl");
  EXPECT_EQ(c.unsound_negatives, 1u);
}

TEST(VerifyPairsTest, ReportsLineOfMalformedJson) {
  TempDir tmp;
  std::ofstream(tmp.path() / "p.jsonl") << first_record(1).dump() << "\n{oops\n";
  try {
    verify_pairs_file(tmp.path() / "p.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(e.path().find("p.jsonl:2"), std::string::npos) << e.path();
  }
}

TEST(MetricsTest, RoundTrip) {
  Metrics m{0.875, {{0.0, 0.0}, {0.25, 0.75}, {1.0, 1.0}}};
  auto j = to_json(m);
  EXPECT_EQ(j.dump(), R"({"auc":0.875,"roc":[[0.0,0.0],[0.25,0.75],[1.0,1.0]]})");
  Metrics back = metrics_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.auc, m.auc);
  EXPECT_EQ(back.roc, m.roc);
}

TEST(MetricsTest, RejectsInvalidReports) {
  auto bad = [](const char* text) {
    try {
      metrics_from_json(nlohmann::json::parse(text));
    } catch (const SchemaError& e) {
      return e.path();
    }
    return std::string("accepted");
  };
  EXPECT_EQ(bad(R"({"roc":[]})"), "/auc");
  EXPECT_EQ(bad(R"({"auc":1.5,"roc":[]})"), "/auc");
  EXPECT_EQ(bad(R"({"auc":0.5})"), "/roc");
  EXPECT_EQ(bad(R"({"auc":0.5,"roc":[[0.5,0.5],[0.2,0.9]]})"), "/roc/1");
  EXPECT_EQ(bad(R"({"auc":0.5,"roc":[[0.5]]})"), "/roc/0");
}

TEST(MetricsTest, LoadsFromFile) {
  TempDir tmp;
  std::ofstream(tmp.path() / "metrics.json") << R"({"auc": 0.5, "roc": [[0, 0], [1, 1]]})";
  EXPECT_DOUBLE_EQ(load_metrics(tmp.path() / "metrics.json").auc, 0.5);
  EXPECT_THROW(load_metrics(tmp.path() / "absent.json"), SchemaError);
}

int cli_status(const std::string& args) {
  std::string cmd = std::string(BLOCKPAIR_CLI) + " " + args + " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

TEST(VerifyCliTest, ExitStatus) {
  EXPECT_EQ(cli_status("--verify " + data_path("e2e/golden/pairs.jsonl").string()), 0);
  TempDir tmp;
  std::ofstream(tmp.path() / "p.jsonl") << first_record(1).dump() << "\n";
  EXPECT_EQ(cli_status("--verify " + (tmp.path() / "p.jsonl").string()), 3);
}

}  // namespace
}  // namespace blockpair
