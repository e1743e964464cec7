// Copyright 2026 The SepsLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exception types shared by every module. Callers that need to distinguish
// usage problems from runtime failures (the CLI maps them to exit codes 2 and
// 1) catch `UsageError` separately from `Error`.

#ifndef SEPSLAB_ERRORS_H_
#define SEPSLAB_ERRORS_H_

#include <stdexcept>
#include <string>

namespace sepslab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, unknown method name, missing input file.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ContextOverflowError : public Error {
 public:
  ContextOverflowError(int length, int max_context);
  int length() const { return length_; }
  int max_context() const { return max_context_; }

 private:
  int length_;
  int max_context_;
};

class CodecError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during optimization.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sepslab

#endif  // SEPSLAB_ERRORS_H_
