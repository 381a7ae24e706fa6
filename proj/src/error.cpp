#include "pairprobit/error.hpp"

namespace pairprobit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid_argument";
    case ErrorKind::DimensionMismatch:
      return "dimension_mismatch";
    case ErrorKind::NoDiscordantPairs:
      return "no_discordant_pairs";
    case ErrorKind::NonConvergence:
      return "non_convergence";
    case ErrorKind::Separation:
      return "separation";
    case ErrorKind::SingularSigma:
      return "singular_sigma";
    case ErrorKind::PropensityDegenerate:
      return "propensity_degenerate";
    case ErrorKind::NonIntegrable:
      return "non_integrable";
    case ErrorKind::Parse:
      return "parse";
    case ErrorKind::AllReplicationsFailed:
      return "all_replications_failed";
  }
  return "unknown";
}

}  // namespace pairprobit
