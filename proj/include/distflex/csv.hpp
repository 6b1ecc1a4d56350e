#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "distflex/types.hpp"

namespace distflex::csv {

/// Minimal line/field splitter for the plain comma-separated files this tool
/// reads and writes. No quoting: entity ids and product codes are validated
/// to be comma-free on output.
struct Row {
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
};

class Reader {
  public:
    /// header: expected header line (exact match after whitespace trim).
    Reader(std::istream& in, std::string_view header, std::string_view what);

    /// Next data row, skipping blank lines. Returns false at EOF.
    bool next(Row& row);

  private:
    std::istream& in_;
    std::string what_;
    std::string line_;
    std::size_t line_no_ = 0;
    std::size_t n_cols_ = 0;
};

std::int64_t parse_int(std::string_view text, std::string_view what, std::size_t line_no);
double parse_double(std::string_view text, std::string_view what, std::size_t line_no);

/// Deterministic float formatting (shortest round-trip via %.17g fallback).
std::string format_double(double v);

}  // namespace distflex::csv
