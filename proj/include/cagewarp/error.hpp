// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cagewarp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input file. `field()` names the offending entry.
class LoadError : public Error {
 public:
  LoadError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegenerateCageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Inner-cage vertices not strictly inside the outer cage.
class ContainmentError : public ValidationError {
 public:
  ContainmentError(std::vector<int> vertices, const std::string& what)
      : ValidationError(what), vertices_(std::move(vertices)) {}
  const std::vector<int>& vertices() const { return vertices_; }

 private:
  std::vector<int> vertices_;
};

class PhaseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace cagewarp
