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

#include <random>

#include "blockpair/bmerge.hpp"
#include "blockpair/ingest.hpp"
#include "blockpair/linemap.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

namespace blockpair {
namespace {

using oracle::signatures;
using oracle::synthetic_block;

std::vector<Address> addresses(const std::vector<BasicBlock>& blocks) {
  std::vector<Address> out;
  for (const auto& b : blocks)
    for (const auto& i : b.instructions) out.push_back(i.address);
  std::sort(out.begin(), out.end());
  return out;
}

TEST(MergeBlocksTest, Example) {
  BasicBlock p = synthetic_block("f", 0x10, 2, 0b1);
  BasicBlock q = synthetic_block("f", 0x30, 1, 0b1);
  BasicBlock m = merge_blocks(p, q);
  EXPECT_EQ(m.start_address, 0x10u);
  EXPECT_EQ(m.id, "f@0x10");
  EXPECT_EQ(m.instructions.size(), 3u);
  EXPECT_EQ(m.labels, oracle::labels_from_mask(0b1));
  EXPECT_EQ(m.merged_from, (std::vector<std::string>{"f@0x10", "f@0x30"}));
}

TEST(MergeBlocksTest, Symmetric) {
  BasicBlock p = synthetic_block("f", 0x40, 2, 0b11);
  BasicBlock q = synthetic_block("f", 0x10, 3, 0b100);
  EXPECT_EQ(merge_blocks(p, q), merge_blocks(q, p));
}

TEST(MergeBlocksTest, InstructionsInAddressOrder) {
  BasicBlock p = synthetic_block("f", 0x40, 2, 1);
  BasicBlock q = synthetic_block("f", 0x10, 2, 1);
  BasicBlock m = merge_blocks(p, q);
  EXPECT_TRUE(std::is_sorted(m.instructions.begin(), m.instructions.end(),
                             [](const auto& a, const auto& b) { return a.address < b.address; }));
}

// The four patch blocks of the AArch64 fixture fold into one block whose
// labels are the union of theirs.
TEST(MergeBlocksTest, PatchChainMergesIntoOne) {
  using testing::data_path;
  ProgramDump d = parse_dump(data_path("annotate/unlzw_O0_aarch64.dump.json"));
  AnnotationCache c = load_annotation_file(data_path("annotate/unlzw_O0_aarch64.annotations.json"),
                                           "", instruction_addresses(d));
  ProgramDump merged = bmerge_dump(annotate_blocks(d, c));
  auto golden = testing::read_json(data_path("bmerge/patch_chain.golden.json"));
  auto want = golden["merged_from"].get<std::vector<std::string>>();
  LabelSet labels;
  for (const auto& e : golden["labels"]) labels.insert({e[0].get<std::string>(), e[1].get<std::uint32_t>()});

  const auto& blocks = merged.functions.at(0).blocks;
  auto it = std::find_if(blocks.begin(), blocks.end(),
                         [&](const BasicBlock& b) { return b.merged_from == want; });
  ASSERT_NE(it, blocks.end());
  EXPECT_EQ(it->labels, labels);
  EXPECT_EQ(blocks.size(), 3u);
  EXPECT_TRUE(is_bmerge_normal_form(blocks));
}

TEST(BmergeTest, DisjointSetsUnchanged) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x10, 1, 0b01), synthetic_block("f", 0x20, 1, 0b10)};
  EXPECT_EQ(bmerge(in), in);
}

TEST(BmergeTest, BothSubsetsAbsorbed) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x10, 1, 0b11), synthetic_block("f", 0x20, 1, 0b01),
                                synthetic_block("f", 0x30, 1, 0b10)};
  auto out = bmerge(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].labels, oracle::labels_from_mask(0b11));
  EXPECT_EQ(out[0].merged_from.size(), 3u);
  // Every merge order reaches this same single block.
  auto outcomes = oracle::bmerge_all_outcomes(in);
  ASSERT_EQ(outcomes.size(), 1u);
  EXPECT_EQ(*outcomes.begin(), signatures(out));
}

TEST(BmergeTest, SingletonUnchanged) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x10, 4, 0b101)};
  EXPECT_EQ(bmerge(in), in);
}

TEST(BmergeTest, EqualSetsChainCollapse) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x30, 1, 0b1), synthetic_block("f", 0x10, 1, 0b1),
                                synthetic_block("f", 0x20, 1, 0b1)};
  auto out = bmerge(in);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "f@0x10");
}

// {a} sits under two incomparable supersets; it joins the one that starts
// lower.
TEST(BmergeTest, AmbiguousSubsetGoesToLowerSuperset) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x50, 1, 0b001), synthetic_block("f", 0x30, 1, 0b011),
                                synthetic_block("f", 0x10, 1, 0b101)};
  auto out = bmerge(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].merged_from, (std::vector<std::string>{"f@0x10", "f@0x50"}));
  EXPECT_EQ(out[1].merged_from, (std::vector<std::string>{"f@0x30"}));
}

TEST(BmergeTest, EmptyLabelsRejected) {
  std::vector<BasicBlock> in = {synthetic_block("f", 0x10, 1, 0)};
  EXPECT_THROW(bmerge(in), EmptyLabelError);
}

class BmergePropertyTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng{20240611};
};

TEST_F(BmergePropertyTest, NormalFormConservationIdempotence) {
  for (int iter = 0; iter < 300; ++iter) {
    auto in = oracle::random_blocks(rng, "f", 12, 8);
    auto out = bmerge(in);
    ASSERT_TRUE(is_bmerge_normal_form(out));
    ASSERT_EQ(addresses(out), addresses(in));
    ASSERT_EQ(bmerge(out), out);
    for (const auto& b : out) {
      ASSERT_FALSE(b.instructions.empty());
      ASSERT_EQ(b.start_address, b.instructions.front().address);
    }
  }
}

TEST_F(BmergePropertyTest, AgreesWithFixpointOracle) {
  for (int iter = 0; iter < 300; ++iter) {
    auto in = oracle::random_blocks(rng, "f", 12, 8);
    ASSERT_EQ(signatures(bmerge(in)), oracle::bmerge_fixpoint(in)) << "instance " << iter;
  }
}

TEST_F(BmergePropertyTest, OutcomeIsReachableByPairwiseMerges) {
  int unique = 0;
  for (int iter = 0; iter < 200; ++iter) {
    auto in = oracle::random_blocks(rng, "f", 6, 5);
    auto outcomes = oracle::bmerge_all_outcomes(in);
    auto got = signatures(bmerge(in));
    ASSERT_TRUE(outcomes.count(got)) << "instance " << iter;
    if (outcomes.size() == 1) ++unique;
  }
  EXPECT_GT(unique, 100);
}

TEST_F(BmergePropertyTest, PermutationInvariant) {
  for (int iter = 0; iter < 50; ++iter) {
    auto in = oracle::random_blocks(rng, "f", 12, 8);
    auto expect = signatures(bmerge(in));
    for (int p = 0; p < 20; ++p) {
      std::shuffle(in.begin(), in.end(), rng);
      ASSERT_EQ(signatures(bmerge(in)), expect);
    }
  }
}

TEST(BmergeDumpTest, ReportsPerFunctionCounts) {
  ProgramDump d;
  d.functions.push_back({"a", 0x10, {synthetic_block("a", 0x10, 1, 1), synthetic_block("a", 0x20, 1, 1)}, false, false});
  d.functions.push_back({"b", 0x40, {synthetic_block("b", 0x40, 1, 1)}, false, false});
  std::vector<BmergeFunctionStats> stats;
  ProgramDump out = bmerge_dump(d, &stats);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_TRUE(stats[0].changed());
  EXPECT_EQ(stats[0].blocks_after, 1u);
  EXPECT_FALSE(stats[1].changed());
  EXPECT_EQ(out.block_count(), 2u);
}

}  // namespace
}  // namespace blockpair
