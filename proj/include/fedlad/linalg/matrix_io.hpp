// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LINALG_MATRIX_IO_HPP
#define FEDLAD_LINALG_MATRIX_IO_HPP

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedlad/linalg/dense_matrix.hpp"

namespace fedlad::linalg {

/// Parse failure carrying the 1-based line number it was detected on.
class MatrixParseError : public std::runtime_error {
public:
    MatrixParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::vector<std::string_view> split_spaces(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(' ', start);
        out.push_back(s.substr(start, end == std::string_view::npos ? s.size() - start : end - start));
        if (end == std::string_view::npos) {
            break;
        }
        start = end + 1;
    }
    return out;
}

template <typename T>
bool parse_token(std::string_view tok, T& value) {
    if (tok.empty()) {
        return false;
    }
    const char* first = tok.data();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

}  // namespace detail

/*
 * Matrix text format:
 *   line 1:     "<rows> <cols>"
 *   next rows:  <cols> decimal reals separated by single spaces
 * Lines starting with '#' are comments. Blank lines are ignored.
 */
inline DenseMatrix read_matrix(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool have_header = false;
    std::vector<double> data;
    std::size_t rows_read = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto toks = detail::split_spaces(line);
        if (!have_header) {
            if (toks.size() != 2 || !detail::parse_token(toks[0], rows) ||
                !detail::parse_token(toks[1], cols)) {
                throw MatrixParseError(line_no, "expected header '<rows> <cols>'");
            }
            if (rows == 0 || cols == 0) {
                throw MatrixParseError(line_no, "matrix dimensions must be positive");
            }
            have_header = true;
            data.reserve(rows * cols);
            continue;
        }
        if (rows_read == rows) {
            throw MatrixParseError(line_no, "more rows than declared");
        }
        if (toks.size() != cols) {
            throw MatrixParseError(line_no, "expected " + std::to_string(cols) + " values, found " +
                                                std::to_string(toks.size()));
        }
        for (const auto tok : toks) {
            double x = 0.0;
            if (!detail::parse_token(tok, x)) {
                throw MatrixParseError(line_no, "cannot parse '" + std::string(tok) + "' as a real");
            }
            data.push_back(x);
        }
        ++rows_read;
    }
    if (!have_header) {
        throw MatrixParseError(line_no + 1, "missing header");
    }
    if (rows_read != rows) {
        throw MatrixParseError(line_no + 1, "expected " + std::to_string(rows) + " rows, found " +
                                                std::to_string(rows_read));
    }
    return DenseMatrix(rows, cols, std::move(data));
}

inline DenseMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open matrix file '" + path + "'");
    }
    return read_matrix(in);
}

/// Writes values with round-trip precision.
inline void write_matrix(std::ostream& out, const DenseMatrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(r, c));
            if (c > 0) {
                out << ' ';
            }
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace fedlad::linalg

#endif  // FEDLAD_LINALG_MATRIX_IO_HPP
