#include "smoothgnn/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smoothgnn/errors.hpp"

namespace sg {

namespace {

const char* kHeader = "experiment,dataset,model,seed,lambda_f,lambda_l,kl_bits,f1_test,wall_seconds";

std::string version_line() {
  return "# smoothgnn-results v" + std::to_string(kResultsVersion);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

std::string ResultsRow::payload() const {
  std::ostringstream ss;
  ss << experiment << ',' << dataset << ',' << model << ',' << seed << ',' << fmt(lambda_f) << ','
     << fmt(lambda_l) << ',' << fmt(kl_bits) << ',' << fmt(f1_test);
  return ss.str();
}

ResultsWriter::ResultsWriter(const std::string& path) : path_(path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path) || fs::file_size(path) == 0) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw ParseError("cannot create results file: " + path);
    out << version_line() << "\n" << kHeader << "\n";
  }
}

void ResultsWriter::add_row(const ResultsRow& row) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw ParseError("cannot append to results file: " + path_);
  out << row.payload() << ',' << fmt(row.wall_seconds) << "\n";
}

std::vector<ResultsRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open results file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != version_line()) {
    throw ParseError("results file has a missing or unknown schema version: " + path);
  }
  if (!std::getline(in, line) || line != kHeader) {
    throw ParseError("results file header mismatch: " + path);
  }
  std::vector<ResultsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ResultsRow r;
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw ParseError("short results row: " + line);
      return tok;
    };
    r.experiment = next();
    r.dataset = next();
    r.model = next();
    r.seed = std::stoull(next());
    r.lambda_f = std::stod(next());
    r.lambda_l = std::stod(next());
    r.kl_bits = std::stod(next());
    r.f1_test = std::stod(next());
    r.wall_seconds = std::stod(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sg
