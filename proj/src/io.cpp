#include "pairprobit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pairprobit/error.hpp"

namespace pairprobit::io {

namespace {

std::string location(const std::string& source, std::size_t line, std::size_t column) {
  return source + ":" + std::to_string(line) + ": column " + std::to_string(column);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
  }
  return out;
}

int parse_binary(const std::string& field, const std::string& where) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw Error(ErrorKind::Parse, where + ": expected 0 or 1, got '" + field + "'");
}

double parse_real(const std::string& field, const std::string& where) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (field.empty() || used != field.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, where + ": expected a finite number, got '" + field + "'");
  }
  return v;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_dataset_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t k = 0;
  bool header_seen = false;
  std::vector<MatchedPair> pairs;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (!header_seen) {
      if (fields.size() < 3 || fields[0] != "y_a" || fields[1] != "y_b" || fields[2] != "d" ||
          (fields.size() - 3) % 2 != 0) {
        throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) +
                                          ": header must be y_a,y_b,d,x_a_1..x_a_k,x_b_1..x_b_k");
      }
      k = (fields.size() - 3) / 2;
      for (std::size_t j = 0; j < k; ++j) {
        const std::string a = "x_a_" + std::to_string(j + 1);
        const std::string b = "x_b_" + std::to_string(j + 1);
        if (fields[3 + j] != a || fields[3 + k + j] != b) {
          throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) +
                                            ": expected covariate columns x_a_1..x_a_k then x_b_1..x_b_k");
        }
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3 + 2 * k) {
      throw Error(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(3 + 2 * k) + " fields, found " +
                                        std::to_string(fields.size()));
    }
    MatchedPair p;
    p.y_a = parse_binary(fields[0], location(source, line_no, 1));
    p.y_b = parse_binary(fields[1], location(source, line_no, 2));
    p.d = parse_binary(fields[2], location(source, line_no, 3));
    for (std::size_t j = 0; j < k; ++j) {
      p.x_a.push_back(parse_real(fields[3 + j], location(source, line_no, 4 + j)));
    }
    for (std::size_t j = 0; j < k; ++j) {
      p.x_b.push_back(parse_real(fields[3 + k + j], location(source, line_no, 4 + k + j)));
    }
    pairs.push_back(std::move(p));
  }
  if (!header_seen) throw Error(ErrorKind::Parse, source + ": empty file");
  if (pairs.empty()) throw Error(ErrorKind::Parse, source + ": no data rows");
  return Dataset(std::move(pairs));
}

Dataset parse_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_text(buf.str(), path);
}

std::string emit_dataset(const Dataset& data) {
  const std::size_t k = data.dimension();
  std::string out = "y_a,y_b,d";
  for (std::size_t j = 0; j < k; ++j) out += ",x_a_" + std::to_string(j + 1);
  for (std::size_t j = 0; j < k; ++j) out += ",x_b_" + std::to_string(j + 1);
  out += '\n';
  for (const auto& p : data.pairs()) {
    out += std::to_string(p.y_a) + ',' + std::to_string(p.y_b) + ',' + std::to_string(p.d);
    for (double v : p.x_a) out += ',' + format_g17(v);
    for (double v : p.x_b) out += ',' + format_g17(v);
    out += '\n';
  }
  return out;
}

Inequality parse_inequality(const std::string& name) {
  if (name == "inclusive") return Inequality::Inclusive;
  if (name == "strict") return Inequality::Strict;
  throw Error(ErrorKind::InvalidArgument, "unknown inequality '" + name + "' (inclusive|strict)");
}

Censoring parse_censoring(const std::string& name) {
  if (name == "face_value") return Censoring::FaceValue;
  if (name == "drop_censored") return Censoring::DropCensoredAtOrBelow;
  throw Error(ErrorKind::InvalidArgument, "unknown censoring convention '" + name +
                                              "' (face_value|drop_censored)");
}

const char* to_string(Inequality v) { return v == Inequality::Inclusive ? "inclusive" : "strict"; }
const char* to_string(Censoring v) { return v == Censoring::FaceValue ? "face_value" : "drop_censored"; }

const std::vector<LeadRecord>& lead_records() {
  static const std::vector<LeadRecord> records{
      {1, 38, 16},  {2, 23, 18},  {3, 41, 18},  {4, 18, 24},  {5, 37, 19},  {6, 36, 11},  {7, 23, 10},
      {8, 62, 15},  {9, 31, 16},  {10, 34, 18}, {11, 24, 18}, {12, 14, 13}, {13, 21, 19}, {14, 17, 10},
      {15, 16, 16}, {16, 20, 16}, {17, 15, 24}, {18, 10, 13}, {19, 45, 9},  {20, 39, 14}, {21, 22, 21},
      {22, 35, 19}, {23, 49, 7},  {24, 48, 18}, {25, 44, 19}, {26, 35, 12}, {27, 43, 11}, {28, 39, 22},
      {29, 34, 25}, {30, 13, 16}, {31, 73, 13}, {32, 25, 11}, {33, 27, 13},
  };
  return records;
}

const std::vector<LeukaemiaRecord>& leukaemia_records() {
  static const std::vector<LeukaemiaRecord> records{
      {1, 1, 1, "control"},  {1, 10, 1, "6-MP"}, {2, 22, 1, "control"},  {2, 7, 1, "6-MP"},
      {3, 3, 1, "control"},  {3, 32, 0, "6-MP"}, {4, 12, 1, "control"},  {4, 23, 1, "6-MP"},
      {5, 8, 1, "control"},  {5, 22, 1, "6-MP"}, {6, 17, 1, "control"},  {6, 6, 1, "6-MP"},
      {7, 2, 1, "control"},  {7, 16, 1, "6-MP"}, {8, 11, 1, "control"},  {8, 34, 0, "6-MP"},
      {9, 8, 1, "control"},  {9, 32, 0, "6-MP"}, {10, 12, 1, "control"}, {10, 25, 0, "6-MP"},
      {11, 2, 1, "control"}, {11, 11, 0, "6-MP"}, {12, 5, 1, "control"}, {12, 20, 0, "6-MP"},
      {13, 4, 1, "control"}, {13, 19, 0, "6-MP"}, {14, 15, 1, "control"}, {14, 6, 1, "6-MP"},
      {15, 8, 1, "control"}, {15, 17, 0, "6-MP"}, {16, 23, 1, "control"}, {16, 35, 0, "6-MP"},
      {17, 5, 1, "control"}, {17, 6, 1, "6-MP"}, {18, 11, 1, "control"}, {18, 13, 1, "6-MP"},
      {19, 4, 1, "control"}, {19, 9, 0, "6-MP"}, {20, 1, 1, "control"},  {20, 6, 0, "6-MP"},
      {21, 8, 1, "control"}, {21, 10, 0, "6-MP"},
  };
  return records;
}

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool exceeds(double value, double threshold, Inequality inequality) {
  return inequality == Inequality::Inclusive ? value >= threshold : value > threshold;
}

}  // namespace

std::uint64_t lead_checksum() {
  std::string text;
  for (const auto& r : lead_records()) {
    text += std::to_string(r.pair) + ',' + format_g17(r.case_level) + ',' + format_g17(r.control_level) + '\n';
  }
  return fnv1a(text);
}

std::uint64_t leukaemia_checksum() {
  std::string text;
  for (const auto& r : leukaemia_records()) {
    text += std::to_string(r.pair) + ',' + format_g17(r.weeks) + ',' + std::to_string(r.event) + ',' +
            r.group + '\n';
  }
  return fnv1a(text);
}

Dataset load_lead_dataset(double threshold, Inequality inequality) {
  if (!std::isfinite(threshold)) throw Error(ErrorKind::InvalidArgument, "threshold must be finite");
  std::vector<MatchedPair> pairs;
  for (const auto& r : lead_records()) {
    MatchedPair p;
    p.y_a = exceeds(r.case_level, threshold, inequality) ? 1 : 0;
    p.y_b = exceeds(r.control_level, threshold, inequality) ? 1 : 0;
    p.d = 1;
    pairs.push_back(p);
  }
  return Dataset(std::move(pairs));
}

Dataset load_leukaemia_dataset(double threshold, Censoring censoring, Inequality inequality) {
  if (!std::isfinite(threshold)) throw Error(ErrorKind::InvalidArgument, "threshold must be finite");
  const auto& records = leukaemia_records();
  std::vector<MatchedPair> pairs;
  for (std::size_t i = 0; i + 1 < records.size(); i += 2) {
    const LeukaemiaRecord* control = &records[i];
    const LeukaemiaRecord* treated = &records[i + 1];
    if (control->group != "control") std::swap(control, treated);
    bool undecided = false;
    for (const auto* r : {control, treated}) {
      if (r->event == 0 && !exceeds(r->weeks, threshold, inequality)) undecided = true;
    }
    if (censoring == Censoring::DropCensoredAtOrBelow && undecided) continue;
    MatchedPair p;
    p.y_a = exceeds(treated->weeks, threshold, inequality) ? 1 : 0;
    p.y_b = exceeds(control->weeks, threshold, inequality) ? 1 : 0;
    p.d = 1;
    pairs.push_back(p);
  }
  return Dataset(std::move(pairs));
}

}  // namespace pairprobit::io
