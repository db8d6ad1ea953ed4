#pragma once

// Versioned results CSV. Readers reject files written by other schema
// versions. Wall time is the only column that may differ between reruns
// of an identical config.

#include <cstdint>
#include <string>
#include <vector>

namespace sg {

inline constexpr int kResultsVersion = 1;

struct ResultsRow {
  std::string experiment;
  std::string dataset;
  std::string model;
  uint64_t seed = 0;
  double lambda_f = 0.0;
  double lambda_l = 0.0;
  double kl_bits = 0.0;
  double f1_test = 0.0;
  double wall_seconds = 0.0;

  // everything except wall time, formatted; used by determinism checks
  std::string payload() const;
};

class ResultsWriter {
 public:
  explicit ResultsWriter(const std::string& path);
  void add_row(const ResultsRow& row);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::vector<ResultsRow> read_results(const std::string& path);

}  // namespace sg
