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

#pragma once

#include <stdexcept>
#include <string>

namespace blockpair {

// Root of every error the pipeline raises. `stage()` names the pipeline
// stage that detected the problem so the CLI can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// ingest

class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error("ingest", path + ": " + what), path_(path) {}
  // JSON-pointer-like location of the offending record.
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class OverlapError : public Error {
 public:
  OverlapError(const std::string& function, const std::string& what)
      : Error("ingest", "overlapping blocks in function '" + function + "': " + what),
        function_(function) {}
  const std::string& function() const noexcept { return function_; }

 private:
  std::string function_;
};

class DuplicateSymbolError : public Error {
 public:
  explicit DuplicateSymbolError(const std::string& name)
      : Error("ingest", "duplicate function symbol '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// linemap

class ResolverSpawnError : public Error {
 public:
  explicit ResolverSpawnError(const std::string& what) : Error("annotate", what) {}
};

class ResolverProtocolError : public Error {
 public:
  explicit ResolverProtocolError(const std::string& line)
      : Error("annotate", "unparseable resolver output line: '" + line + "'"), line_(line) {}
  const std::string& line() const noexcept { return line_; }

 private:
  std::string line_;
};

class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& what) : Error("annotate", what) {}
};

// bmerge

class EmptyLabelError : public Error {
 public:
  explicit EmptyLabelError(const std::string& block_id)
      : Error("bmerge", "block '" + block_id + "' has an empty label set"), block_id_(block_id) {}
  const std::string& block_id() const noexcept { return block_id_; }

 private:
  std::string block_id_;
};

// normalize

class UnknownIsaError : public Error {
 public:
  explicit UnknownIsaError(const std::string& isa)
      : Error("normalize", "unknown ISA '" + isa + "'") {}
};

// dataset

class PoolExhaustedError : public Error {
 public:
  explicit PoolExhaustedError(const std::string& what) : Error("dataset", what) {}
};

// cli

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("manifest", what) {}
};

class ToolchainMissingError : public Error {
 public:
  explicit ToolchainMissingError(const std::string& triple)
      : Error("build", "toolchain missing: " + triple), triple_(triple) {}
  const std::string& triple() const noexcept { return triple_; }

 private:
  std::string triple_;
};

}  // namespace blockpair
