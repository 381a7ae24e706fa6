#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairprobit/model.hpp"

namespace pairprobit::io {

/// Reads the pair CSV layout: header `y_a,y_b,d,x_a_1..x_a_k,x_b_1..x_b_k`
/// (k inferred from the header), LF or CRLF line endings. Throws
/// Error(Parse) naming the line and column of the first malformed field.
Dataset parse_dataset_text(const std::string& text, const std::string& source = "<input>");
Dataset parse_dataset(const std::string& path);

/// Writes the same layout with 17 significant digits, so parse(emit(d)) == d.
std::string emit_dataset(const Dataset& data);

/// How a measured value is compared with a dichotomization threshold.
enum class Inequality {
  Inclusive,  // y = I(value >= threshold)
  Strict,     // y = I(value > threshold)
};

/// Treatment of right-censored remission times.
enum class Censoring {
  FaceValue,               // censored times used as observed
  DropCensoredAtOrBelow,   // drop pairs whose censored time cannot decide the outcome
};

Inequality parse_inequality(const std::string& name);
/// Throws Error(InvalidArgument) for an unknown convention name.
Censoring parse_censoring(const std::string& name);
const char* to_string(Inequality v);
const char* to_string(Censoring v);

struct LeadRecord {
  int pair = 0;
  double case_level = 0.0;     // ug/dl
  double control_level = 0.0;  // ug/dl
};

struct LeukaemiaRecord {
  int pair = 0;
  double weeks = 0.0;
  int event = 1;  // 1 = relapse observed, 0 = censored
  std::string group;  // "control" or "6-MP"
};

/// Blood lead levels of 33 exposed (case) and control children.
const std::vector<LeadRecord>& lead_records();
/// Remission times of 21 pairs of acute leukaemia patients, two rows per pair.
const std::vector<LeukaemiaRecord>& leukaemia_records();

/// FNV-1a digest of the embedded tables, for regression fixtures.
std::uint64_t lead_checksum();
std::uint64_t leukaemia_checksum();

/// 33 pairs with A = case child (d = 1), B = control, k = 0.
Dataset load_lead_dataset(double threshold = 16.0, Inequality inequality = Inequality::Inclusive);

/// 21 pairs with A = 6-MP patient (d = 1), B = control, k = 0. Under
/// DropCensoredAtOrBelow a pair is removed when a censored time does not
/// exceed the threshold, since its outcome is then unknown.
Dataset load_leukaemia_dataset(double threshold = 12.0, Censoring censoring = Censoring::FaceValue,
                               Inequality inequality = Inequality::Inclusive);

}  // namespace pairprobit::io
