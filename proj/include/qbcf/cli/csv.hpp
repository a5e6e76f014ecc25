/* Copyright 2026 The qbcf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef QBCF_CLI_CSV_HPP
#define QBCF_CLI_CSV_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qbcf/dataset.hpp"
#include "qbcf/error.hpp"
#include "qbcf/format.hpp"
#include "qbcf/mnp_gibbs.hpp"

namespace qbcf::cli {

/// Header: id, choice, then per alternative j = 0..J: x_e_j, z_j_1..z_j_dz
/// and, for simulated data, v_true_j.
inline std::vector<std::string> dataset_header(int num_alternatives, Eigen::Index instrument_dim, bool with_truth) {
  std::vector<std::string> cols = {"id", "choice"};
  for (int j = 0; j <= num_alternatives; ++j) {
    const std::string s = std::to_string(j);
    cols.push_back("x_e_" + s);
    for (Eigen::Index k = 1; k <= instrument_dim; ++k) cols.push_back("z_" + s + "_" + std::to_string(k));
    if (with_truth) cols.push_back("v_true_" + s);
  }
  return cols;
}

inline void write_dataset_csv(std::ostream& os, const ChoiceDataset& data) {
  const Eigen::Index dz = data.instrument_dim();
  const auto header = dataset_header(data.num_alternatives, dz, data.v_true.has_value());
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << data.id[i] << ',' << data.choice[i];
    for (int j = 0; j <= data.num_alternatives; ++j) {
      os << ',' << format_double(data.x_e(r, j));
      for (Eigen::Index k = 0; k < dz; ++k) os << ',' << format_double(data.z[static_cast<std::size_t>(j)](r, k));
      if (data.v_true) os << ',' << format_double((*data.v_true)(r, j));
    }
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

inline double parse_double(std::string_view s, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw SchemaError(where(row, column) + ": '" + std::string(s) + "' is not a finite number");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t row, const std::string& column) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaError(where(row, column) + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

}  // namespace detail

/*! \brief Parses a dataset written by write_dataset_csv.

    J and the instrument dimension are read off the header, which must
    match dataset_header exactly. Rows are numbered from 1 (the first data
    line) in error messages.
*/
inline ChoiceDataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("dataset is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  for (auto f : detail::split_fields(line)) header.emplace_back(f);

  int num_alternatives = -1;
  for (const auto& h : header) {
    if (h.rfind("x_e_", 0) == 0) ++num_alternatives;
  }
  if (num_alternatives < 1) throw SchemaError("header must list x_e_0 and at least x_e_1");
  Eigen::Index dz = 0;
  while (std::find(header.begin(), header.end(), "z_0_" + std::to_string(dz + 1)) != header.end()) ++dz;
  const bool with_truth = std::find(header.begin(), header.end(), "v_true_0") != header.end();
  const auto expected = dataset_header(num_alternatives, dz, with_truth);
  if (header != expected) {
    std::string want;
    for (std::size_t c = 0; c < expected.size(); ++c) want += (c ? "," : "") + expected[c];
    throw SchemaError("unexpected header; expected " + want);
  }

  std::vector<std::vector<double>> cols(header.size() - 2);
  ChoiceDataset data;
  data.num_alternatives = num_alternatives;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw SchemaError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    data.id.push_back(detail::parse_int<std::int64_t>(fields[0], row, "id"));
    const int choice = detail::parse_int<int>(fields[1], row, "choice");
    if (choice < 0 || choice > num_alternatives) {
      throw SchemaError(detail::where(row, "choice") + ": value " + std::to_string(choice) + " outside 0.." +
                        std::to_string(num_alternatives));
    }
    data.choice.push_back(choice);
    for (std::size_t c = 2; c < fields.size(); ++c) cols[c - 2].push_back(detail::parse_double(fields[c], row, header[c]));
  }
  if (row == 0) throw SchemaError("dataset has no data rows");

  const auto n = static_cast<Eigen::Index>(row);
  data.x_e.resize(n, num_alternatives + 1);
  data.z.assign(static_cast<std::size_t>(num_alternatives + 1), Eigen::MatrixXd(n, dz));
  if (with_truth) data.v_true = Eigen::MatrixXd(n, num_alternatives + 1);
  std::size_t c = 0;
  for (int j = 0; j <= num_alternatives; ++j) {
    data.x_e.col(j) = Eigen::Map<const Eigen::VectorXd>(cols[c++].data(), n);
    for (Eigen::Index k = 0; k < dz; ++k) {
      data.z[static_cast<std::size_t>(j)].col(k) = Eigen::Map<const Eigen::VectorXd>(cols[c++].data(), n);
    }
    if (with_truth) data.v_true->col(j) = Eigen::Map<const Eigen::VectorXd>(cols[c++].data(), n);
  }
  data.validate();
  return data;
}

/// One row per stored draw, one column per parameter.
inline void write_draws_csv(std::ostream& os, const PosteriorDraws& draws) {
  for (std::size_t c = 0; c < draws.names.size(); ++c) os << (c ? "," : "") << draws.names[c];
  os << '\n';
  for (Eigen::Index r = 0; r < draws.theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < draws.theta.cols(); ++c) os << (c ? "," : "") << format_double(draws.theta(r, c));
    os << '\n';
  }
}

}  // namespace qbcf::cli

#endif  // QBCF_CLI_CSV_HPP
