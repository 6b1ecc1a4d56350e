#include "distflex/csv.hpp"

#include <charconv>
#include <cstdio>

namespace distflex::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

void split(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

}  // namespace

Reader::Reader(std::istream& in, std::string_view header, std::string_view what)
    : in_(in), what_(what) {
    std::vector<std::string_view> want;
    split(header, want);
    n_cols_ = want.size();

    if (!std::getline(in_, line_)) return;  // empty file: no rows, tolerated
    ++line_no_;
    std::vector<std::string_view> got;
    split(line_, got);
    if (got != want)
        throw ValidationError(what_ + ": bad header '" + trim(line_).substr(0, 120).data() +
                              "' (expected '" + std::string(header) + "')");
}

bool Reader::next(Row& row) {
    while (std::getline(in_, line_)) {
        ++line_no_;
        if (trim(line_).empty()) continue;
        split(line_, row.fields);
        row.line_no = line_no_;
        if (row.fields.size() != n_cols_)
            throw ValidationError(what_ + ": line " + std::to_string(line_no_) + ": expected " +
                                  std::to_string(n_cols_) + " fields, got " +
                                  std::to_string(row.fields.size()));
        return true;
    }
    return false;
}

std::int64_t parse_int(std::string_view text, std::string_view what, std::size_t line_no) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ValidationError(std::string(what) + ": line " + std::to_string(line_no) +
                              ": bad integer '" + std::string(text) + "'");
    return v;
}

double parse_double(std::string_view text, std::string_view what, std::size_t line_no) {
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ValidationError(std::string(what) + ": line " + std::to_string(line_no) +
                              ": bad number '" + std::string(text) + "'");
    return v;
}

std::string format_double(double v) {
    char buf[40];
    // Shortest representation that round-trips keeps diffs and digests stable.
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0;
        std::from_chars(buf, buf + sizeof buf, back);
        if (back == v) break;
    }
    return buf;
}

}  // namespace distflex::csv
