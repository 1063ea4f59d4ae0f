#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "esparse/sparsereg.hpp"

namespace esparse::cli {

// Plain-text model report:
//
//   # esparse model report
//   seed 1
//   generation 12
//   lambda1 1e-05
//   lambda2 0
//   percent_error 1.3e-12
//   training_mse 4.1e-20
//   data_hash 0123456789abcdef
//   term -3.6734693877551021 X1
//   ...
//
// Coefficients carry 17 significant digits; terms use the canonical
// expression grammar, the intercept is the term "1".
struct ModelReport {
    sparsereg::SparseModel model;
    std::uint64_t seed = 0;
    int generation = 0;
    std::uint64_t data_hash = 0;
};

void write_report(const ModelReport& report, std::ostream& out);
void write_report(const ModelReport& report, const std::filesystem::path& path);

// Throws DataError on malformed input.
[[nodiscard]] ModelReport read_report(std::istream& in);
[[nodiscard]] ModelReport read_report(const std::filesystem::path& path);

[[nodiscard]] std::string format_hash(std::uint64_t hash);
[[nodiscard]] std::string format_coefficient(double value);

// Canonical names of the non-intercept terms, sorted and joined by "; ".
[[nodiscard]] std::string support_key(const sparsereg::SparseModel& model);

}  // namespace esparse::cli
