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

// Address -> (file, line) resolution through an addr2line-compatible
// resolver, and block annotation with the resulting label sets.

#pragma once

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blockpair/error.hpp"
#include "blockpair/types.hpp"

extern char** environ;

namespace blockpair {

struct AnnotationCache {
  std::string binary_path;
  // Every key was part of a resolution request; an empty list means the
  // resolver had no line information for that address.
  std::map<Address, std::vector<SourceLine>> mapping;

  const std::vector<SourceLine>* find(Address a) const {
    auto it = mapping.find(a);
    return it == mapping.end() ? nullptr : &it->second;
  }
};

enum class PathMode {
  kStripCommonPrefix,  // per-cache prefix stripping
  kKeepPrefix,         // slash/dot cleanup only; caller strips jointly
};

// Backslashes to slashes, then lexical collapse of "." and "..".
inline std::string clean_source_path(std::string_view raw) {
  std::string s(raw);
  for (char& c : s)
    if (c == '\\') c = '/';
  std::string out = std::filesystem::path(s).lexically_normal().generic_string();
  return out.empty() ? s : out;
}

// Removes the longest directory prefix shared by every file across `caches`.
// Only whole directory components are removed; file names always survive.
inline void strip_common_prefix(std::vector<AnnotationCache*> caches) {
  std::vector<std::string> prefix;
  bool first = true;
  for (const auto* cache : caches) {
    for (const auto& [addr, lines] : cache->mapping) {
      for (const auto& sl : lines) {
        std::vector<std::string> dirs;
        for (const auto& part : std::filesystem::path(sl.file).parent_path()) {
          dirs.push_back(part.generic_string());
        }
        if (first) {
          prefix = std::move(dirs);
          first = false;
        } else {
          std::size_t n = 0;
          while (n < prefix.size() && n < dirs.size() && prefix[n] == dirs[n]) ++n;
          prefix.resize(n);
        }
      }
    }
  }
  if (prefix.empty()) return;
  for (auto* cache : caches) {
    for (auto& [addr, lines] : cache->mapping) {
      for (auto& sl : lines) {
        std::filesystem::path rest;
        std::size_t k = 0;
        for (const auto& part : std::filesystem::path(sl.file)) {
          if (k++ >= prefix.size()) rest /= part;
        }
        sl.file = rest.generic_string();
      }
      std::sort(lines.begin(), lines.end());
      lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    }
  }
}

namespace detail {

inline bool is_address_echo(std::string_view line) {
  if (line.size() < 3 || line.substr(0, 2) != "0x") return false;
  for (char c : line.substr(2))
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline Address parse_echo(std::string_view line) {
  Address a = 0;
  std::from_chars(line.data() + 2, line.data() + line.size(), a, 16);
  return a;
}

// "file:line", "file:line (discriminator N)", "??:0", "??:?". Returns
// nullopt for unresolvable locations.
inline std::optional<SourceLine> parse_location(const std::string& line) {
  std::string_view text = line;
  if (auto paren = text.find(" ("); paren != std::string_view::npos) text = text.substr(0, paren);
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw ResolverProtocolError(line);
  std::string_view file = text.substr(0, colon);
  std::string_view num = text.substr(colon + 1);
  if (num == "?") return std::nullopt;
  std::uint32_t value = 0;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || p != num.data() + num.size()) throw ResolverProtocolError(line);
  if (file == "??" || value == 0) return std::nullopt;
  return SourceLine{clean_source_path(file), value};
}

}  // namespace detail

// Parses `<resolver> -a -i -f` output: an address echo line followed by one
// or more (function, location) line pairs per requested address.
inline AnnotationCache parse_resolver_output(std::istream& in, const std::string& binary_path,
                                             const std::vector<Address>& requested,
                                             PathMode mode = PathMode::kStripCommonPrefix) {
  AnnotationCache cache;
  cache.binary_path = binary_path;
  std::set<Address> wanted(requested.begin(), requested.end());

  std::string line;
  std::optional<Address> current;
  std::optional<std::string> pending_function;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!pending_function && detail::is_address_echo(line)) {
      Address a = detail::parse_echo(line);
      if (!wanted.count(a)) throw ResolverProtocolError(line);
      current = a;
      cache.mapping[a];
      continue;
    }
    if (!current) throw ResolverProtocolError(line);
    if (!pending_function) {
      pending_function = line;
      continue;
    }
    pending_function.reset();
    if (auto sl = detail::parse_location(line)) {
      auto& frames = cache.mapping[*current];
      if (std::find(frames.begin(), frames.end(), *sl) == frames.end()) frames.push_back(*sl);
    }
  }
  if (pending_function) throw ResolverProtocolError(*pending_function);
  for (Address a : wanted) {
    if (!cache.mapping.count(a))
      throw ResolverProtocolError("<no output for address " + format_hex(a) + ">");
  }
  for (auto& [a, frames] : cache.mapping) std::sort(frames.begin(), frames.end());
  if (mode == PathMode::kStripCommonPrefix) strip_common_prefix({&cache});
  return cache;
}

// Runs one resolver process for the whole batch of addresses.
inline AnnotationCache resolve_addresses(const std::string& resolver, const std::string& binary_path,
                                         const std::vector<Address>& addresses,
                                         PathMode mode = PathMode::kStripCommonPrefix) {
  // Addresses go through a temporary file so the child never blocks on a
  // full pipe while we are still writing.
  char input_name[] = "/tmp/blockpair-addrs-XXXXXX";
  int input_fd = ::mkstemp(input_name);
  if (input_fd < 0) throw ResolverSpawnError(std::string("mkstemp: ") + std::strerror(errno));
  {
    std::string text;
    for (Address a : addresses) text += format_hex(a) + "\n";
    if (::write(input_fd, text.data(), text.size()) != static_cast<ssize_t>(text.size())) {
      ::close(input_fd);
      ::unlink(input_name);
      throw ResolverSpawnError("cannot write resolver input");
    }
    ::lseek(input_fd, 0, SEEK_SET);
  }

  int out_pipe[2];
  if (::pipe(out_pipe) != 0) {
    ::close(input_fd);
    ::unlink(input_name);
    throw ResolverSpawnError(std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, input_fd, STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<std::string> args = {resolver, "-e", binary_path, "-a", "-i", "-f"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, resolver.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(out_pipe[1]);
  ::close(input_fd);
  ::unlink(input_name);
  if (rc != 0) {
    ::close(out_pipe[0]);
    throw ResolverSpawnError("cannot start resolver '" + resolver + "': " + std::strerror(rc));
  }

  std::string output;
  char buf[65536];
  ssize_t n;
  while ((n = ::read(out_pipe[0], buf, sizeof(buf))) > 0) output.append(buf, static_cast<size_t>(n));
  ::close(out_pipe[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) == 127)
    throw ResolverSpawnError("resolver '" + resolver + "' could not be executed");
  if (WEXITSTATUS(status) != 0)
    throw ResolverSpawnError("resolver '" + resolver + "' exited with status " +
                             std::to_string(WEXITSTATUS(status)));

  std::istringstream stream(output);
  return parse_resolver_output(stream, binary_path, addresses, mode);
}

// Pre-resolved annotation file: {"0x...": [["file", line], ...], ...}.
// When `requested` is non-empty only those addresses are kept.
inline AnnotationCache load_annotation_file(const std::filesystem::path& path,
                                            const std::string& binary_path,
                                            const std::vector<Address>& requested = {},
                                            PathMode mode = PathMode::kStripCommonPrefix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string(), "cannot open annotation file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError(path.string() + "#", "expected object");
  std::set<Address> wanted(requested.begin(), requested.end());

  AnnotationCache cache;
  cache.binary_path = binary_path;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string where = path.string() + "#/" + it.key();
    auto addr = parse_hex(it.key());
    if (!addr) throw SchemaError(where, "malformed hex address");
    if (!wanted.empty() && !wanted.count(*addr)) continue;
    if (!it.value().is_array()) throw SchemaError(where, "expected array of [file, line]");
    auto& frames = cache.mapping[*addr];
    for (const auto& entry : it.value()) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
          !entry[1].is_number_integer())
        throw SchemaError(where, "expected [file, line]");
      auto line = entry[1].get<long long>();
      if (line < 0) throw SchemaError(where, "negative line number");
      if (line == 0) continue;
      SourceLine sl{clean_source_path(entry[0].get<std::string>()),
                    static_cast<std::uint32_t>(line)};
      if (std::find(frames.begin(), frames.end(), sl) == frames.end()) frames.push_back(sl);
    }
    std::sort(frames.begin(), frames.end());
  }
  if (mode == PathMode::kStripCommonPrefix) strip_common_prefix({&cache});
  return cache;
}

inline std::vector<Address> instruction_addresses(const ProgramDump& dump) {
  std::set<Address> all;
  for (const auto& f : dump.functions)
    for (const auto& b : f.blocks)
      for (const auto& ins : b.instructions) all.insert(ins.address);
  return {all.begin(), all.end()};
}

// Attaches label sets, then drops blocks without any line information and
// functions left without blocks.
inline ProgramDump annotate_blocks(const ProgramDump& dump, const AnnotationCache& cache) {
  ProgramDump out;
  out.config = dump.config;
  out.library_dictionary = dump.library_dictionary;
  for (const auto& f : dump.functions) {
    FunctionRecord annotated = f;
    annotated.blocks.clear();
    for (const auto& b : f.blocks) {
      BasicBlock block = b;
      block.labels = LabelSet{};
      for (const auto& ins : b.instructions) {
        const auto* frames = cache.find(ins.address);
        if (!frames)
          throw CoverageError("address " + format_hex(ins.address) + " in function '" + f.name +
                              "' is missing from the annotation cache of " + cache.binary_path);
        for (const auto& sl : *frames) block.labels.insert(sl);
      }
      if (!block.labels.empty()) annotated.blocks.push_back(std::move(block));
    }
    if (!annotated.blocks.empty()) out.functions.push_back(std::move(annotated));
  }
  return out;
}

}  // namespace blockpair
