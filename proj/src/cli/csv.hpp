#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "actsub/linalg.hpp"
#include "actsub/scoring.hpp"

namespace actsub::cli {

// Minimal RFC-4180 writer: '\n' line endings, fields quoted only when they
// contain a comma, quote or newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  std::string str() const;

 private:
  std::size_t width_;
  std::string text_;
};

std::string csv_field(double value);

// index,score,method
std::string format_score_csv(const ScoreReport& report);

struct ScoreCsv {
  linalg::Vec scores;
  std::string method;
};

// Parses a file produced by format_score_csv. Throws FormatError (position =
// 1-based line number) on header or column mismatches.
ScoreCsv parse_score_csv(const std::string& text);
ScoreCsv read_score_csv(const std::filesystem::path& path);

}  // namespace actsub::cli
