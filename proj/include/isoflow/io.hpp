#pragma once

// Serialization helpers: matrix literals as JSON arrays of [re, im] pairs
// (row-major), and deterministic CSV formatting.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"

namespace isoflow {

// Round-trippable, locale-independent double formatting.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline nlohmann::json matrix_to_json(const HermitianMatrix& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < h.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < h.dim(); ++j)
      row.push_back({h(i, j).real(), h(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline HermitianMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw validation_error("matrix json: expected array of rows");
  const int n = static_cast<int>(j.size());
  Cmat m(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw validation_error("matrix json: ragged rows");
    for (int k = 0; k < n; ++k) {
      const auto& pair = row.at(static_cast<std::size_t>(k));
      if (!pair.is_array() || pair.size() != 2)
        throw validation_error("matrix json: entries must be [re, im] pairs");
      m.at(i, k) = cplx(pair.at(0).get<double>(), pair.at(1).get<double>());
    }
  }
  return HermitianMatrix(m);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw validation_error("cannot open for writing: " + path);
  }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out_ << ',';
      out_ << cols[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) out_ << ',';
      out_ << fmt_double(vals[i]);
    }
    out_ << '\n';
  }

  // Mixed row: leading integer id, then doubles.
  void row(long id, const std::vector<double>& vals) {
    out_ << id;
    for (double v : vals) out_ << ',' << fmt_double(v);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace isoflow
