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

// Run orchestration: manifest parsing and validation, the optional build
// matrix, per-dump preparation (ingest, sanitize, annotate, bmerge) and
// per-configuration-pair corpus assembly.

#pragma once

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockpair/bmerge.hpp"
#include "blockpair/bpair.hpp"
#include "blockpair/dataset.hpp"
#include "blockpair/error.hpp"
#include "blockpair/ingest.hpp"
#include "blockpair/linemap.hpp"
#include "blockpair/normalize.hpp"
#include "blockpair/types.hpp"

extern char** environ;

namespace blockpair {

namespace fs = std::filesystem;

// A failure inside a pipeline stage, with the run context attached.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& context, const std::string& what)
      : Error(stage, "stage '" + stage + "' failed [" + context + "]: " + what) {}
};

enum class ResolverMode { kAnnotationFile, kExternal };

struct ManifestEntry {
  BuildConfig config;
  fs::path dump;
  std::optional<fs::path> annotations;
  std::optional<fs::path> binary;
};

struct BuildSpec {
  std::map<std::string, std::vector<fs::path>> sources;  // program -> files
  fs::path output_dir;
  // "compiler:isa" -> command prefix; overrides the defaults.
  std::map<std::string, std::vector<std::string>> toolchains;
  std::vector<std::string> extra_flags;
};

struct RunManifest {
  std::vector<ManifestEntry> matrix;
  ResolverMode resolver_mode = ResolverMode::kAnnotationFile;
  std::string resolver = "addr2line";
  std::optional<std::uint64_t> seed;
  fs::path output_dir = "out";
  bool negatives = true;
  bool split = true;
  bool split_by_function = false;
  unsigned jobs = 0;
  // Explicit config-label pairs; empty means every pair of distinct configs.
  std::vector<std::pair<std::string, std::string>> config_pairs;
  std::optional<BuildSpec> build;
};

namespace detail {

inline fs::path resolve_relative(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::string need_string(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ValidationError(where + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

// Relative paths in the manifest are resolved against `base_dir`.
inline RunManifest parse_manifest(const nlohmann::json& doc, const fs::path& base_dir) {
  using detail::need_string;
  if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");
  RunManifest m;
  auto matrix = doc.find("matrix");
  if (matrix == doc.end() || !matrix->is_array())
    throw ValidationError("manifest field 'matrix' must be an array");
  for (std::size_t k = 0; k < matrix->size(); ++k) {
    const auto& e = (*matrix)[k];
    const std::string where = "matrix[" + std::to_string(k) + "]";
    if (!e.is_object()) throw ValidationError(where + " must be an object");
    ManifestEntry entry;
    std::string isa = need_string(e, "isa", where);
    std::string compiler = need_string(e, "compiler", where);
    std::string opt = need_string(e, "opt_level", where);
    auto i = parse_isa(isa);
    auto c = parse_compiler(compiler);
    auto o = parse_opt_level(opt);
    if (!i) throw ValidationError(where + ": unknown ISA '" + isa + "'");
    if (!c) throw ValidationError(where + ": unknown compiler '" + compiler + "'");
    if (!o) throw ValidationError(where + ": unknown optimization level '" + opt + "'");
    entry.config.isa = *i;
    entry.config.compiler = *c;
    entry.config.opt_level = *o;
    entry.config.program_name = need_string(e, "program", where);
    entry.dump = detail::resolve_relative(base_dir, need_string(e, "dump", where));
    if (e.contains("annotations"))
      entry.annotations = detail::resolve_relative(base_dir, need_string(e, "annotations", where));
    if (e.contains("binary"))
      entry.binary = detail::resolve_relative(base_dir, need_string(e, "binary", where));
    m.matrix.push_back(std::move(entry));
  }
  if (doc.contains("resolver")) {
    std::string r = need_string(doc, "resolver", "manifest");
    if (r == "file") {
      m.resolver_mode = ResolverMode::kAnnotationFile;
    } else {
      m.resolver_mode = ResolverMode::kExternal;
      m.resolver = r;
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ValidationError("'seed' must be an unsigned integer");
    m.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output"))
    m.output_dir = detail::resolve_relative(base_dir, need_string(doc, "output", "manifest"));
  if (doc.contains("split_by_function")) m.split_by_function = doc["split_by_function"].get<bool>();
  if (doc.contains("jobs")) m.jobs = doc["jobs"].get<unsigned>();
  if (auto st = doc.find("stages"); st != doc.end()) {
    if (!st->is_object()) throw ValidationError("'stages' must be an object");
    m.negatives = st->value("negatives", true);
    m.split = st->value("split", true);
  }
  if (auto pairs = doc.find("pairs"); pairs != doc.end()) {
    for (const auto& p : *pairs) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
        throw ValidationError("'pairs' entries must be [configA, configB]");
      m.config_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }
  if (auto b = doc.find("build"); b != doc.end()) {
    BuildSpec spec;
    spec.output_dir = detail::resolve_relative(base_dir, b->value("output_dir", std::string("bin")));
    if (auto src = b->find("sources"); src != b->end()) {
      for (auto it = src->begin(); it != src->end(); ++it)
        for (const auto& f : it.value())
          spec.sources[it.key()].push_back(detail::resolve_relative(base_dir, f.get<std::string>()));
    }
    if (auto tc = b->find("toolchains"); tc != b->end())
      for (auto it = tc->begin(); it != tc->end(); ++it)
        spec.toolchains[it.key()] = it.value().get<std::vector<std::string>>();
    if (auto fl = b->find("flags"); fl != b->end())
      spec.extra_flags = fl->get<std::vector<std::string>>();
    m.build = std::move(spec);
  }
  return m;
}

inline RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

// Distinct config labels in order of first appearance.
inline std::vector<std::string> config_labels(const RunManifest& m) {
  std::vector<std::string> labels;
  for (const auto& e : m.matrix) {
    std::string l = e.config.label();
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }
  return labels;
}

inline std::vector<std::pair<std::string, std::string>> planned_pairs(const RunManifest& m) {
  if (!m.config_pairs.empty()) return m.config_pairs;
  std::vector<std::pair<std::string, std::string>> out;
  auto labels = config_labels(m);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j) out.emplace_back(labels[i], labels[j]);
  return out;
}

inline void validate(const RunManifest& m) {
  auto labels = config_labels(m);
  if (labels.size() < 2)
    throw ValidationError("the build matrix needs at least two distinct configurations, got " +
                          std::to_string(labels.size()));
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : m.matrix) {
    if (!seen.emplace(e.config.program_name, e.config.label()).second)
      throw ValidationError("duplicate matrix entry for " + e.config.program_name + " " +
                            e.config.label());
    if (m.resolver_mode == ResolverMode::kAnnotationFile && !e.annotations)
      throw ValidationError("matrix entry " + e.config.program_name + " " + e.config.label() +
                            " has no 'annotations' file but the resolver mode is 'file'");
  }
  if (m.negatives && !m.seed) throw ValidationError("a seed is required when negatives are requested");
  for (const auto& [a, b] : m.config_pairs) {
    if (a == b) throw ValidationError("config pair pairs '" + a + "' with itself");
    for (const auto& l : {a, b})
      if (std::find(labels.begin(), labels.end(), l) == labels.end())
        throw ValidationError("config pair names unknown config '" + l + "'");
  }
}

// Runs fn(0..n-1) on up to `jobs` threads (0 = hardware concurrency). The
// exception from the lowest failing index is rethrown after all finish.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(jobs, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// External processes

inline std::optional<fs::path> find_on_path(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    return ::access(name.c_str(), X_OK) == 0 ? std::optional<fs::path>(name) : std::nullopt;
  }
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return std::nullopt;
}

// Spawns argv and waits; returns the exit status (127 when it cannot start).
inline int run_command(const std::vector<std::string>& argv_in) {
  std::vector<std::string> args = argv_in;
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) return 127;
  int status = 0;
  ::waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

inline std::string join_command(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

inline std::string_view target_triple(Isa isa) {
  switch (isa) {
    case Isa::kX86: return "i686-linux-gnu";
    case Isa::kX86_64: return "x86_64-linux-gnu";
    case Isa::kArm32: return "arm-linux-gnueabihf";
    case Isa::kAArch64: return "aarch64-linux-gnu";
  }
  return "";
}

struct Toolchain {
  std::vector<std::string> command;
  // Programs that must be on PATH for the toolchain to work.
  std::vector<std::string> requires_tools;
};

inline Toolchain default_toolchain(Compiler compiler, Isa isa) {
  const std::string triple(target_triple(isa));
  const bool native = isa == Isa::kX86_64 || isa == Isa::kX86;
  Toolchain t;
  if (compiler == Compiler::kGcc) {
    t.command = {native ? "gcc" : triple + "-gcc"};
    if (isa == Isa::kX86) t.command.push_back("-m32");
  } else {
    t.command = {"clang"};
    if (isa == Isa::kX86) t.command.push_back("-m32");
    if (!native) {
      t.command.push_back("--target=" + triple);
      t.requires_tools.push_back(triple + "-ld");
    }
  }
  t.requires_tools.insert(t.requires_tools.begin(), t.command.front());
  return t;
}

struct BuiltBinary {
  BuildConfig config;
  fs::path path;
  std::string command;
};

// Compiles every (program, config) in the matrix that has sources with
// `-g -O<level>`. Checks all toolchains before compiling anything.
inline std::vector<BuiltBinary> build_matrix(const RunManifest& m) {
  if (!m.build) throw ValidationError("manifest has no 'build' section");
  const BuildSpec& spec = *m.build;

  std::vector<std::pair<const ManifestEntry*, Toolchain>> jobs;
  std::set<std::string> missing;
  for (const auto& e : m.matrix) {
    if (!spec.sources.count(e.config.program_name)) continue;
    std::string key = std::string(to_string(e.config.compiler)) + ":" + std::string(to_string(e.config.isa));
    Toolchain tc = default_toolchain(e.config.compiler, e.config.isa);
    if (auto it = spec.toolchains.find(key); it != spec.toolchains.end()) {
      tc.command = it->second;
      tc.requires_tools = {tc.command.front()};
    }
    for (const auto& tool : tc.requires_tools)
      if (!find_on_path(tool))
        missing.insert(std::string(target_triple(e.config.isa)) + " (" +
                       std::string(to_string(e.config.compiler)) + ": " + tool + ")");
    jobs.emplace_back(&e, std::move(tc));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s;
    throw ToolchainMissingError(list);
  }

  fs::create_directories(spec.output_dir);
  std::vector<BuiltBinary> built;
  for (const auto& [entry, tc] : jobs) {
    BuiltBinary b;
    b.config = entry->config;
    b.path = spec.output_dir / (entry->config.program_name + "__" + entry->config.label());
    std::vector<std::string> argv = tc.command;
    argv.push_back("-g");
    argv.push_back("-" + std::string(to_string(entry->config.opt_level)));
    argv.insert(argv.end(), spec.extra_flags.begin(), spec.extra_flags.end());
    argv.push_back("-o");
    argv.push_back(b.path.string());
    for (const auto& src : spec.sources.at(entry->config.program_name)) argv.push_back(src.string());
    b.command = join_command(argv);
    int rc = run_command(argv);
    if (rc != 0)
      throw StageError("build", entry->config.program_name + " " + entry->config.label(),
                       "compiler exited with status " + std::to_string(rc) + ": " + b.command);
    built.push_back(std::move(b));
  }
  return built;
}

// ---------------------------------------------------------------------------
// Per-dump preparation

struct LogEvent {
  std::string stage;
  std::string config;
  std::string program;
  std::string function;
  nlohmann::ordered_json counts;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["stage"] = stage;
    j["config"] = config;
    j["program"] = program;
    j["function"] = function.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(function);
    j["counts"] = counts;
    return j;
  }
};

struct PreparedDump {
  const ManifestEntry* entry = nullptr;
  ProgramDump sanitized;
  AnnotationCache cache;
  ProgramDump merged;
  ConfigArtifacts artifacts;
  std::vector<LogEvent> events;
};

inline std::string entry_context(const ManifestEntry& e) {
  return e.config.program_name + " " + e.config.label();
}

inline void ingest_and_resolve(const RunManifest& m, PreparedDump& p) {
  const ManifestEntry& e = *p.entry;
  const std::string ctx = entry_context(e);
  const std::string label = e.config.label();
  ProgramDump dump;
  try {
    dump = parse_dump(e.dump);
  } catch (const Error& err) {
    throw StageError("ingest", ctx, err.what());
  }
  if (!(dump.config == e.config))
    throw StageError("ingest", ctx,
                     "dump " + e.dump.string() + " describes " + dump.config.program_name + " " +
                         dump.config.label());
  p.artifacts.config = dump.config;
  p.artifacts.functions_ingested = dump.functions.size();
  p.artifacts.blocks_ingested = dump.block_count();
  p.events.push_back({"ingest", label, e.config.program_name, "",
                      {{"functions", dump.functions.size()},
                       {"blocks", dump.block_count()},
                       {"instructions", dump.instruction_count()}}});

  p.sanitized = sanitize(dump);
  p.artifacts.external_functions = dump.functions.size() - p.sanitized.functions.size();
  p.events.push_back({"sanitize", label, e.config.program_name, "",
                      {{"functions", p.sanitized.functions.size()},
                       {"external_removed", p.artifacts.external_functions},
                       {"library_dictionary", p.sanitized.library_dictionary.size()}}});

  const auto addresses = instruction_addresses(p.sanitized);
  const std::string binary = e.binary ? e.binary->string() : dump.config.binary_path;
  try {
    if (m.resolver_mode == ResolverMode::kAnnotationFile) {
      p.cache = load_annotation_file(*e.annotations, binary, addresses, PathMode::kKeepPrefix);
    } else if (!addresses.empty()) {
      p.cache = resolve_addresses(m.resolver, binary, addresses, PathMode::kKeepPrefix);
    }
  } catch (const ResolverSpawnError&) {
    throw;
  } catch (const Error& err) {
    throw StageError("annotate", ctx, err.what());
  }
}

inline void annotate_and_merge(PreparedDump& p) {
  const ManifestEntry& e = *p.entry;
  const std::string ctx = entry_context(e);
  const std::string label = e.config.label();
  ProgramDump annotated;
  try {
    annotated = annotate_blocks(p.sanitized, p.cache);
  } catch (const Error& err) {
    throw StageError("annotate", ctx, err.what());
  }
  p.artifacts.blocks_annotated = annotated.block_count();
  p.events.push_back({"annotate", label, e.config.program_name, "",
                      {{"functions", annotated.functions.size()},
                       {"blocks_before", p.sanitized.block_count()},
                       {"blocks_after", annotated.block_count()}}});
  try {
    p.merged = bmerge_dump(annotated, &p.artifacts.bmerge);
  } catch (const Error& err) {
    throw StageError("bmerge", ctx, err.what());
  }
  for (const auto& f : p.artifacts.bmerge) {
    p.events.push_back({"bmerge", label, e.config.program_name, f.function,
                        {{"blocks_before", f.blocks_before}, {"blocks_after", f.blocks_after}}});
  }
}

// Parses, resolves and merges every matrix entry. Source paths are made
// relative by stripping the directory prefix shared by all builds of the
// same program, so labels from different build directories still meet.
inline std::vector<PreparedDump> prepare_all(const RunManifest& m) {
  std::vector<PreparedDump> prepared(m.matrix.size());
  for (std::size_t k = 0; k < m.matrix.size(); ++k) prepared[k].entry = &m.matrix[k];
  parallel_for(prepared.size(), m.jobs, [&](std::size_t k) { ingest_and_resolve(m, prepared[k]); });

  std::map<std::string, std::vector<AnnotationCache*>> by_program;
  for (auto& p : prepared) by_program[p.entry->config.program_name].push_back(&p.cache);
  for (auto& [program, caches] : by_program) strip_common_prefix(caches);

  parallel_for(prepared.size(), m.jobs, [&](std::size_t k) { annotate_and_merge(prepared[k]); });
  return prepared;
}

// ---------------------------------------------------------------------------
// Per-config-pair corpus assembly

struct PairRunOutput {
  fs::path directory;
  std::vector<PairRecord> records;  // as written to pairs.jsonl
  UnmatchedReport unmatched;
  CorpusStats stats;
  std::vector<LogEvent> events;
};

inline std::string run_directory_name(const std::vector<std::string>& programs,
                                      const std::string& left, const std::string& right) {
  std::string name;
  for (const auto& p : programs) name += (name.empty() ? "" : "+") + p;
  return name + "__" + left + "__" + right;
}

inline PairRunOutput assemble_pair(const RunManifest& m, const std::vector<PreparedDump>& prepared,
                                   const std::string& left_label, const std::string& right_label) {
  const std::string ctx = left_label + " vs " + right_label;
  PairRunOutput out;
  RunArtifacts run;

  // Programs built under both configs, in first-appearance order.
  std::vector<std::string> programs;
  std::map<std::string, const PreparedDump*> left_by_program, right_by_program;
  for (const auto& p : prepared) {
    const std::string& prog = p.entry->config.program_name;
    if (p.entry->config.label() == left_label) left_by_program[prog] = &p;
    if (p.entry->config.label() == right_label) right_by_program[prog] = &p;
  }
  for (const auto& p : prepared) {
    const std::string& prog = p.entry->config.program_name;
    if (left_by_program.count(prog) && right_by_program.count(prog) &&
        std::find(programs.begin(), programs.end(), prog) == programs.end())
      programs.push_back(prog);
  }
  if (programs.empty())
    throw StageError("bpair", ctx, "no program is present under both configurations");
  out.directory = m.output_dir / run_directory_name(programs, left_label, right_label);

  std::vector<PairRecord> positives;
  std::vector<PoolBlock> pool;
  for (const auto& prog : programs) {
    const PreparedDump& l = *left_by_program.at(prog);
    const PreparedDump& r = *right_by_program.at(prog);
    run.configs.push_back(l.artifacts);
    run.configs.push_back(r.artifacts);
    out.events.insert(out.events.end(), l.events.begin(), l.events.end());
    out.events.insert(out.events.end(), r.events.begin(), r.events.end());

    ProgramPairing pairing;
    try {
      pairing = pair_programs(l.merged, r.merged);
    } catch (const Error& err) {
      throw StageError("bpair", ctx + " " + prog, err.what());
    }
    out.events.push_back({"bpair", left_label + "|" + right_label, prog, "",
                          {{"pairs", pairing.pairs.size()},
                           {"left_only_functions", pairing.unmatched.left_only_functions.size()},
                           {"right_only_functions", pairing.unmatched.right_only_functions.size()},
                           {"one_sided_components", pairing.unmatched.one_sided_components.size()}}});
    out.unmatched.append(pairing.unmatched);

    try {
      for (const auto& pair : pairing.pairs)
        positives.push_back(
            make_positive(pair, l.merged.library_dictionary, r.merged.library_dictionary));
      for (const auto& f : r.merged.functions)
        for (const auto& b : f.blocks)
          pool.push_back({render_instructions(b, r.merged.config.isa, r.merged.library_dictionary),
                          b.labels, prog, f.name, r.merged.config});
    } catch (const Error& err) {
      throw StageError("normalize", ctx + " " + prog, err.what());
    }
  }
  run.pairs_per_config_pair[left_label + "|" + right_label] = positives.size();
  run.positives_before_dedup = positives.size();
  run.left_only_functions = out.unmatched.left_only_functions.size();
  run.right_only_functions = out.unmatched.right_only_functions.size();
  run.one_sided_components = out.unmatched.one_sided_components.size();

  DedupResult deduped = dedup(std::move(positives));
  run.dedup_removed = deduped.removed;
  out.events.push_back({"dedup", left_label + "|" + right_label, "", "",
                        {{"kept", deduped.records.size()}, {"removed", deduped.removed}}});

  std::vector<PairRecord> records = deduped.records;
  if (m.negatives) {
    std::vector<PairRecord> negatives;
    try {
      negatives = sample_negatives(deduped.records, pool, *m.seed);
    } catch (const Error& err) {
      throw StageError("dataset", ctx, err.what());
    }
    run.negatives = negatives.size();
    records.insert(records.end(), negatives.begin(), negatives.end());
    out.events.push_back({"negatives", left_label + "|" + right_label, "", "",
                          {{"negatives", negatives.size()}, {"pool", pool.size()}}});
  }

  if (m.split) {
    SplitResult split = truncate_and_split(std::move(records), kMaxInstructions, kTrainFraction,
                                           m.seed.value_or(0), m.split_by_function);
    run.truncated_sides = split.truncated_sides;
    run.train = split.train.size();
    run.test = split.test.size();
    out.events.push_back({"split", left_label + "|" + right_label, "", "",
                          {{"train", split.train.size()},
                           {"test", split.test.size()},
                           {"truncated_sides", split.truncated_sides}}});
    out.records = std::move(split.train);
    out.records.insert(out.records.end(), std::make_move_iterator(split.test.begin()),
                       std::make_move_iterator(split.test.end()));
  } else {
    out.records = std::move(records);
  }
  out.stats = compute_stats(run);
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw StageError("output", path.string(), "cannot open for writing");
  f << text;
  if (!f) throw StageError("output", path.string(), "write failed");
}

inline void write_pair_output(const PairRunOutput& out) {
  fs::create_directories(out.directory);
  std::string pairs;
  for (const auto& r : out.records) pairs += to_json(r).dump() + "\n";
  write_text(out.directory / "pairs.jsonl", pairs);
  write_text(out.directory / "stats.json", to_json(out.stats).dump(2) + "\n");
  write_text(out.directory / "unmatched.json", out.unmatched.to_json().dump(2) + "\n");
  std::string log;
  for (const auto& e : out.events) log += e.to_json().dump() + "\n";
  write_text(out.directory / "log.jsonl", log);
}

struct RunResult {
  std::vector<fs::path> run_directories;
};

// Validates the manifest, prepares every dump and writes one run directory
// per configuration pair.
inline RunResult run(const RunManifest& m) {
  validate(m);
  std::vector<PreparedDump> prepared = prepare_all(m);
  const auto pairs = planned_pairs(m);
  std::vector<PairRunOutput> outputs(pairs.size());
  parallel_for(pairs.size(), m.jobs, [&](std::size_t k) {
    outputs[k] = assemble_pair(m, prepared, pairs[k].first, pairs[k].second);
  });
  RunResult result;
  for (const auto& out : outputs) {
    write_pair_output(out);
    result.run_directories.push_back(out.directory);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Single-stage debugging views

inline nlohmann::ordered_json block_to_json(const BasicBlock& b) {
  nlohmann::ordered_json j;
  j["id"] = b.id;
  j["start"] = format_hex(b.start_address);
  j["instructions"] = b.instructions.size();
  j["labels"] = labels_to_json(b.labels);
  j["merged_from"] = b.merged_from;
  return j;
}

inline nlohmann::ordered_json blocks_by_function(const ProgramDump& dump) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : dump.functions) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : f.blocks) arr.push_back(block_to_json(b));
    j[f.name] = std::move(arr);
  }
  return j;
}

}  // namespace blockpair
