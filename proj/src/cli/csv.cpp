#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "actsub/error.hpp"
#include "actsub/store.hpp"

namespace actsub::cli {

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void append_line(std::string& text, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text += ',';
    text += quote(fields[i]);
  }
  text += '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { append_line(text_, header); }

void CsvWriter::add_row(std::vector<std::string> fields) {
  if (fields.size() != width_) throw InvalidInput("csv: row width does not match header");
  append_line(text_, fields);
}

std::string CsvWriter::str() const { return text_; }

std::string csv_field(double value) { return store::format_double(value); }

std::string format_score_csv(const ScoreReport& report) {
  CsvWriter csv({"index", "score", "method"});
  for (std::size_t i = 0; i < report.scores.size(); ++i)
    csv.add_row({std::to_string(i), csv_field(report.scores[i]), report.method});
  return csv.str();
}

ScoreCsv parse_score_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError(FormatErrorKind::kTruncated, 1, "score csv: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_line(line) != std::vector<std::string>{"index", "score", "method"})
    throw FormatError(FormatErrorKind::kGarbled, line_no, "score csv: header must be index,score,method");

  ScoreCsv out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != 3)
      throw FormatError(FormatErrorKind::kGarbled, line_no, "score csv: expected 3 columns");
    std::size_t index = 0;
    auto [iptr, iec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
    if (iec != std::errc() || iptr != fields[0].data() + fields[0].size() || index != out.scores.size())
      throw FormatError(FormatErrorKind::kGarbled, line_no, "score csv: index column out of sequence");
    double score = 0.0;
    auto [sptr, sec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), score);
    if (sec != std::errc() || sptr != fields[1].data() + fields[1].size() || !std::isfinite(score))
      throw FormatError(FormatErrorKind::kGarbled, line_no, "score csv: score is not a finite number");
    if (out.scores.empty()) out.method = fields[2];
    else if (fields[2] != out.method)
      throw FormatError(FormatErrorKind::kGarbled, line_no, "score csv: mixed methods in one file");
    out.scores.push_back(score);
  }
  if (out.scores.empty()) throw FormatError(FormatErrorKind::kTruncated, line_no, "score csv: no rows");
  return out;
}

ScoreCsv read_score_csv(const std::filesystem::path& path) { return parse_score_csv(store::read_text(path)); }

}  // namespace actsub::cli
