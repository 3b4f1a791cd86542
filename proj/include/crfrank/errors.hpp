/*
 * Copyright 2026 The crfrank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crfrank {

// Violated precondition or shape mismatch.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Group too large to enumerate; the caller has to subsample first.
class CapacityError : public ContractError {
 public:
  CapacityError(std::size_t requested, std::size_t cap)
      : ContractError("group of size " + std::to_string(requested) +
                      " exceeds the enumeration cap of " + std::to_string(cap)),
        requested_(requested),
        cap_(cap) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The derivative vector handed to normalization was identically zero.
class DegenerateGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the trainer when an update would leave theta non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crfrank
