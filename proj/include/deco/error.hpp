// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace deco {

/// Base of every error the toolkit throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A binary or JSON file does not match its declared format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training or metric data cannot support the requested computation.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace deco
