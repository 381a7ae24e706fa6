#pragma once

#include <stdexcept>
#include <string>

namespace pairprobit {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NoDiscordantPairs,
  NonConvergence,
  Separation,
  SingularSigma,
  PropensityDegenerate,
  NonIntegrable,
  Parse,
  AllReplicationsFailed,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Numerical failures (as opposed to bad input) map to CLI exit code 2.
  bool is_numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::NonConvergence:
      case ErrorKind::Separation:
      case ErrorKind::SingularSigma:
      case ErrorKind::PropensityDegenerate:
      case ErrorKind::NonIntegrable:
      case ErrorKind::AllReplicationsFailed:
      case ErrorKind::NoDiscordantPairs:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

}  // namespace pairprobit
