#pragma once

#include <stdexcept>
#include <string>

namespace conscope {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run directory could not be parsed. The message carries file and row context.
class LoadError : public Error {
 public:
  LoadError(std::string file, std::string detail);

  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

/// Filesystem write/read failure outside of parsing.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid input to a numerical routine (non-finite data, degenerate targets, bad shapes).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a checkpoint, covariate or run that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace conscope
