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

#include "blockpair/normalize.hpp"
#include "oracles/fuzz.hpp"
#include "oracles/normalize_check.hpp"
#include "support.hpp"

namespace blockpair {
namespace {

using oracle::normalize_text;

const std::set<std::string> kNoLib;

TEST(NormalizeTest, ImmediateBecomesSignPlaceholder) {
  EXPECT_EQ(normalize_text("mov eax, 0x5", Isa::kX86_64, kNoLib), "mov eax <POSITIVE>");
  EXPECT_EQ(normalize_text("sub r3, r3, #1", Isa::kArm32, kNoLib), "sub r3 r3 <POSITIVE>");
  EXPECT_EQ(normalize_text("mov eax, 0x0", Isa::kX86_64, kNoLib), "mov eax <ZERO>");
  EXPECT_EQ(normalize_text("add x0, x0, #-8", Isa::kAArch64, kNoLib), "add x0 x0 <NEGATIVE>");
}

TEST(NormalizeTest, CallKeepsOnlyLibraryNames) {
  const std::set<std::string> lib = {"strcpy"};
  EXPECT_EQ(normalize_text("call strcpy", Isa::kX86_64, lib), "call strcpy");
  EXPECT_EQ(normalize_text("call strcpy", Isa::kX86_64, kNoLib), "call <FOO>");
  EXPECT_EQ(normalize_text("call 401000", Isa::kX86_64, lib), "call <FOO>");
  EXPECT_EQ(normalize_text("bl\t10330 <strcpy@plt>", Isa::kArm32, lib), "bl strcpy");
}

TEST(NormalizeTest, BranchTargetBecomesAddress) {
  EXPECT_EQ(normalize_text("b 0x400c1c", Isa::kAArch64, kNoLib), "b <ADDRESS>");
  EXPECT_EQ(normalize_text("cbz\tw0, 400c1c <f+0x1c>", Isa::kAArch64, kNoLib), "cbz w0 <ADDRESS>");
  EXPECT_EQ(normalize_text("jmp rax", Isa::kX86_64, kNoLib), "jmp rax");
}

TEST(NormalizeTest, StringOperand) {
  EXPECT_EQ(normalize_text("lea rdi,[rip+0xe9c]", Isa::kX86_64, kNoLib, {1}), "lea rdi <STRING>");
}

TEST(NormalizeTest, UnknownIsaName) {
  Instruction ins = parse_instruction_text("nop");
  EXPECT_THROW(normalize_instruction(ins, "mips", kNoLib), UnknownIsaError);
  EXPECT_NO_THROW(normalize_instruction(ins, "aarch64", kNoLib));
}

TEST(NormalizeTest, DependsOnlyOnInputs) {
  Instruction ins = parse_instruction_text("mov eax, 0x5", 0x1000);
  Instruction moved = ins;
  moved.address = 0x2000;
  EXPECT_EQ(normalize_instruction(ins, Isa::kX86_64, kNoLib), normalize_instruction(moved, Isa::kX86_64, kNoLib));
}

TEST(NormalizeBlockTest, OrderPreservedAcrossAllRules) {
  BasicBlock b;
  b.id = "main@0x1149";
  b.start_address = 0x1149;
  const std::vector<std::string> text = {"mov    eax,0x5", "lea    rdi,[rip+0xe9c]", "call   1050 <printf@plt>",
                                         "call   1139 <helper>", "jmp    1187 <main+0x3e>"};
  for (std::size_t k = 0; k < text.size(); ++k) b.instructions.push_back(parse_instruction_text(text[k], 0x1149 + 4 * k));
  b.instructions[1].string_operands = {1};
  const std::set<std::string> lib = {"printf"};
  auto out = normalize_block(b, Isa::kX86_64, lib);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(render(out), "mov eax <POSITIVE> ; lea rdi <STRING> ; call printf ; call <FOO> ; jmp <ADDRESS>");
}

TEST(ParseInstructionTextTest, DropsTrailingComments) {
  Instruction x = parse_instruction_text("lea    rax,[rip+0xe6c]        # 2004 <_IO_stdin_used+0x4>");
  EXPECT_EQ(x.mnemonic, "lea");
  EXPECT_EQ(x.operands, (std::vector<std::string>{"rax", "[rip+0xe6c]"}));
  Instruction a = parse_instruction_text("ldr\tr3, [pc, #8]\t@ 10480 <main+0x30>");
  EXPECT_EQ(a.operands, (std::vector<std::string>{"r3", "[pc, #8]"}));
  Instruction imm = parse_instruction_text("mov\tr0, #0");
  EXPECT_EQ(imm.operands, (std::vector<std::string>{"r0", "#0"}));
}

TEST(ParseInstructionTextTest, KeepsPrefixesOnMnemonic) {
  EXPECT_EQ(parse_instruction_text("rep stos QWORD PTR es:[rdi],rax").mnemonic, "rep stos");
  EXPECT_EQ(parse_instruction_text("bnd jmp QWORD PTR [rip+0x2f75]").mnemonic, "bnd jmp");
}

class GoldenTest : public ::testing::TestWithParam<std::string> {};

TEST_P(GoldenTest, MatchesAndIsIdempotent) {
  auto g = oracle::load_normalize_golden(testing::golden_path("normalize_" + GetParam() + ".json"));
  ASSERT_GE(g.cases.size(), 20u);
  for (const auto& c : g.cases) {
    std::string got = normalize_text(c.ins, g.isa, g.library, c.strings);
    EXPECT_EQ(got, c.expect) << c.ins;
    EXPECT_TRUE(oracle::idempotent(c.expect, g.isa, g.library)) << c.expect;
    EXPECT_EQ(oracle::surviving_literal(c.expect, g.isa, g.library), std::nullopt) << c.expect;
  }
}

TEST_P(GoldenTest, FuzzedInstructions) {
  auto g = oracle::load_normalize_golden(testing::golden_path("normalize_" + GetParam() + ".json"));
  oracle::InstructionFuzzer fuzz(g.isa, 7);
  for (int k = 0; k < 1000; ++k) {
    std::string text = fuzz.next();
    std::string out = normalize_text(text, g.isa, g.library);
    ASSERT_TRUE(oracle::idempotent(out, g.isa, g.library)) << text << " -> " << out;
    auto lit = oracle::surviving_literal(out, g.isa, g.library);
    ASSERT_EQ(lit, std::nullopt) << text << " -> " << out;
  }
}

INSTANTIATE_TEST_SUITE_P(PerIsa, GoldenTest, ::testing::Values("x86_64", "x86", "arm32", "aarch64"));

}  // namespace
}  // namespace blockpair
