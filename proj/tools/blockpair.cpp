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

// Command-line entry point. Runs the whole pipeline from a manifest, the
// optional build matrix, or a single stage over one or two dumps for
// debugging.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockpair/formats.hpp"
#include "blockpair/pipeline.hpp"

namespace {

using namespace blockpair;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;
constexpr int kExitMissingTool = 4;

struct ResolverArg {
  bool file = false;
  std::string value;  // annotation path or resolver executable
};

ResolverArg parse_resolver_arg(const std::string& s) {
  if (s.rfind("file:", 0) == 0) return {true, s.substr(5)};
  return {false, s};
}

ProgramDump annotate_for_debug(const ProgramDump& sanitized, const ResolverArg& r) {
  const auto addresses = instruction_addresses(sanitized);
  AnnotationCache cache;
  if (r.file)
    cache = load_annotation_file(r.value, sanitized.config.binary_path, addresses);
  else if (!addresses.empty())
    cache = resolve_addresses(r.value, sanitized.config.binary_path, addresses);
  return annotate_blocks(sanitized, cache);
}

nlohmann::ordered_json rendered_blocks(const ProgramDump& dump) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : dump.functions) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : f.blocks) {
      nlohmann::ordered_json e;
      e["id"] = b.id;
      e["text"] = PairRecord::join(render_instructions(b, dump.config.isa, dump.library_dictionary));
      arr.push_back(std::move(e));
    }
    j[f.name] = std::move(arr);
  }
  return j;
}

// Runs the pipeline up to `stage` over each dump and prints that stage's view.
int debug_stage(const std::string& stage, const std::vector<std::string>& dumps,
                const std::vector<std::string>& resolvers) {
  if (dumps.empty()) throw ValidationError("--stage " + stage + " needs at least one --dump");
  if (stage == "bpair" && dumps.size() != 2)
    throw ValidationError("--stage bpair needs exactly two --dump arguments");
  const bool needs_labels = stage != "ingest" && stage != "sanitize";
  if (needs_labels && resolvers.empty())
    throw ValidationError("--stage " + stage + " needs --resolver");
  if (needs_labels && resolvers.size() != 1 && resolvers.size() != dumps.size())
    throw ValidationError("give one --resolver, or one per --dump");

  std::vector<ProgramDump> merged;
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < dumps.size(); ++k) {
    ProgramDump dump = parse_dump(dumps[k]);
    if (stage == "ingest") {
      out.push_back(serialize_dump(dump));
      continue;
    }
    ProgramDump clean = sanitize(dump);
    if (stage == "sanitize") {
      out.push_back(serialize_dump(clean));
      continue;
    }
    ResolverArg r = parse_resolver_arg(resolvers.size() == 1 ? resolvers[0] : resolvers[k]);
    ProgramDump annotated = annotate_for_debug(clean, r);
    if (stage == "annotate") {
      out.push_back(blocks_by_function(annotated));
      continue;
    }
    ProgramDump refined = bmerge_dump(annotated);
    if (stage == "bmerge") {
      out.push_back(blocks_by_function(refined));
    } else if (stage == "normalize") {
      out.push_back(rendered_blocks(refined));
    }
    merged.push_back(std::move(refined));
  }
  if (stage == "bpair") {
    ProgramPairing pairing = pair_programs(merged[0], merged[1]);
    nlohmann::ordered_json j;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : pairing.pairs) {
      nlohmann::ordered_json e;
      e["function"] = p.function_name;
      e["left"] = p.left_block.merged_from;
      e["right"] = p.right_block.merged_from;
      e["shared_labels"] = labels_to_json(p.shared_labels);
      j["pairs"].push_back(std::move(e));
    }
    j["unmatched"] = pairing.unmatched.to_json();
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << (out.size() == 1 ? out[0] : out).dump(2) << "\n";
  return kExitOk;
}

// Schema, class balance and negative soundness check of an emitted corpus.
int verify(const std::string& file) {
  CorpusCheck c = verify_pairs_file(file);
  nlohmann::ordered_json j;
  j["positives"] = c.positives;
  j["negatives"] = c.negatives;
  j["train"] = c.train;
  j["test"] = c.test;
  j["unsound_negatives"] = c.unsound_negatives;
  std::cout << j.dump() << "\n";
  if (c.unsound_negatives > 0 || !c.balanced()) {
    std::cerr << "error: " << file << " has " << c.unsound_negatives
              << " negatives sharing a source line and " << c.positives << " positives against "
              << c.negatives << " negatives\n";
    return kExitStage;
  }
  return kExitOk;
}

int build_only(const RunManifest& m) {
  auto built = build_matrix(m);
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  for (const auto& b : built) {
    nlohmann::ordered_json e;
    e["stage"] = "build";
    e["config"] = b.config.label();
    e["program"] = b.config.program_name;
    e["function"] = nullptr;
    e["counts"] = {{"binaries", 1}};
    e["command"] = b.command;
    e["output"] = b.path.string();
    std::cout << e.dump() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build labeled basic-block pair corpora from disassembly dumps."};
  std::string manifest_path;
  std::string stage = "all";
  std::vector<std::string> dumps;
  std::vector<std::string> resolvers;
  std::optional<std::uint64_t> seed;
  bool split_by_function = false;
  std::string out_dir;
  unsigned jobs = 0;
  std::string verify_path;

  app.add_option("--manifest", manifest_path, "Run manifest (JSON)");
  app.add_option("--stage", stage, "Stage to run")
      ->check(CLI::IsMember(
          {"all", "build", "ingest", "sanitize", "annotate", "bmerge", "normalize", "bpair"}));
  app.add_option("--dump", dumps, "Disassembly dump for a single-stage run (repeatable)");
  app.add_option("--resolver", resolvers,
                 "Resolver executable, or file:<annotations.json> (repeatable, one per --dump)");
  app.add_option("--seed", seed, "Seed for negative sampling and the split");
  app.add_flag("--split-by-function", split_by_function, "Keep each function in one split");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Worker threads (0 = available processors)");
  app.add_option("--verify", verify_path, "Check an emitted pairs.jsonl and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (!verify_path.empty()) return verify(verify_path);
    if (stage != "all" && stage != "build") return debug_stage(stage, dumps, resolvers);
    if (manifest_path.empty()) throw ValidationError("--manifest is required for --stage " + stage);
    RunManifest m = load_manifest(manifest_path);
    if (seed) m.seed = seed;
    if (split_by_function) m.split_by_function = true;
    if (!out_dir.empty()) m.output_dir = out_dir;
    if (jobs) m.jobs = jobs;
    if (resolvers.size() == 1) {
      ResolverArg r = parse_resolver_arg(resolvers[0]);
      if (r.file) throw ValidationError("with --manifest, annotation files come from the matrix");
      m.resolver_mode = ResolverMode::kExternal;
      m.resolver = r.value;
    } else if (resolvers.size() > 1) {
      throw ValidationError("--manifest takes at most one --resolver");
    }
    if (stage == "build") return build_only(m);
    RunResult result = run(m);
    for (const auto& dir : result.run_directories) std::cout << dir.string() << "\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ToolchainMissingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingTool;
  } catch (const ResolverSpawnError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingTool;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
}
