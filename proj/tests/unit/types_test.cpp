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

#include "blockpair/types.hpp"

namespace blockpair {
namespace {

TEST(HexTest, FormatsLowercaseWithoutLeadingZeros) {
  EXPECT_EQ(format_hex(0), "0x0");
  EXPECT_EQ(format_hex(0x4008A0), "0x4008a0");
  EXPECT_EQ(format_hex(~Address{0}), "0xffffffffffffffff");
}

TEST(HexTest, ParseIsStrict) {
  EXPECT_EQ(parse_hex("0x10"), Address{16});
  EXPECT_EQ(parse_hex("0x0"), Address{0});
  EXPECT_FALSE(parse_hex("0x010"));
  EXPECT_FALSE(parse_hex("0X10"));
  EXPECT_FALSE(parse_hex("0xAB"));
  EXPECT_FALSE(parse_hex("10"));
  EXPECT_FALSE(parse_hex("0x"));
  EXPECT_FALSE(parse_hex("0x10000000000000000"));
}

TEST(HexTest, RoundTrips) {
  for (Address a : {Address{1}, Address{0x1234}, Address{0xdeadbeefcafe}}) {
    EXPECT_EQ(parse_hex(format_hex(a)), a);
  }
}

TEST(ConfigTest, LabelAndParsing) {
  BuildConfig c{Isa::kAArch64, Compiler::kClang, OptLevel::kO3, "gzip", ""};
  EXPECT_EQ(c.label(), "aarch64-clang-O3");
  EXPECT_EQ(parse_isa("arm32"), Isa::kArm32);
  EXPECT_EQ(parse_isa("x86"), Isa::kX86);
  EXPECT_FALSE(parse_isa("mips"));
  EXPECT_FALSE(parse_opt_level("O4"));
  EXPECT_EQ(parse_compiler("gcc"), Compiler::kGcc);
}

TEST(ConfigTest, EqualityIgnoresBinaryPath) {
  BuildConfig a{Isa::kX86_64, Compiler::kGcc, OptLevel::kO0, "p", "a.out"};
  BuildConfig b = a;
  b.binary_path = "elsewhere";
  EXPECT_EQ(a, b);
  b.opt_level = OptLevel::kO2;
  EXPECT_FALSE(a == b);
}

TEST(LabelSetTest, SetSemantics) {
  LabelSet a{{"f.c", 2}, {"f.c", 1}, {"f.c", 2}};
  LabelSet b{{"f.c", 1}, {"f.c", 2}};
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.contains({"f.c", 1}));
  EXPECT_FALSE(a.contains({"g.c", 1}));
}

TEST(LabelSetTest, SubsetAndIntersection) {
  LabelSet small{{"f.c", 1}};
  LabelSet big{{"f.c", 1}, {"f.c", 2}};
  LabelSet other{{"g.c", 1}};
  EXPECT_TRUE(small.subset_of(big));
  EXPECT_TRUE(big.subset_of(big));
  EXPECT_FALSE(big.subset_of(small));
  EXPECT_TRUE(small.intersects(big));
  EXPECT_FALSE(small.intersects(other));
  EXPECT_EQ(small.united(other).size(), 2u);
  EXPECT_EQ(big.intersected(small), small);
}

TEST(LabelSetTest, SameLineInDifferentFilesDoesNotCollide) {
  LabelSet a{{"a.c", 10}};
  LabelSet b{{"b.c", 10}};
  EXPECT_FALSE(a.intersects(b));
}

TEST(BlockIdTest, FunctionAtStart) { EXPECT_EQ(make_block_id("main", 0x1189), "main@0x1189"); }

}  // namespace
}  // namespace blockpair
