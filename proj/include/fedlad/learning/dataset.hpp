// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_LEARNING_DATASET_HPP
#define FEDLAD_LEARNING_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedlad::learning {

/// splitmix64 finalizer; used to derive independent stream seeds from one base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

/// Labelled samples; features are row-major, one row of n_dims per sample.
struct Dataset {
    std::size_t n_dims = 0;
    std::size_t n_classes = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }

    std::span<const double> sample(std::size_t i) const {
        return std::span<const double>(features).subspan(i * n_dims, n_dims);
    }

    void validate() const {
        if (n_dims == 0) {
            throw std::invalid_argument("Dataset: n_dims must be positive");
        }
        if (features.size() != labels.size() * n_dims) {
            throw std::invalid_argument("Dataset: " + std::to_string(features.size()) + " feature values for " +
                                        std::to_string(labels.size()) + " samples of dimension " +
                                        std::to_string(n_dims));
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] >= n_classes) {
                throw std::invalid_argument("Dataset: sample " + std::to_string(i) + " has label " +
                                            std::to_string(labels[i]) + " >= n_classes " +
                                            std::to_string(n_classes));
            }
        }
    }

    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out{n_dims, n_classes, {}, {}};
        out.features.reserve(indices.size() * n_dims);
        out.labels.reserve(indices.size());
        for (std::size_t i : indices) {
            const auto s = sample(i);
            out.features.insert(out.features.end(), s.begin(), s.end());
            out.labels.push_back(labels[i]);
        }
        return out;
    }

    /// Samples [first, first + count).
    Dataset slice(std::size_t first, std::size_t count) const {
        std::vector<std::size_t> idx(count);
        for (std::size_t k = 0; k < count; ++k) {
            idx[k] = first + k;
        }
        return subset(idx);
    }

    bool operator==(const Dataset&) const = default;
};

/*
 * Class centers for make_blobs. With two or more dimensions the centers form a
 * regular polygon in a seeded random plane, adjacent centers 6 * spread apart.
 * One-dimensional data puts them on a line with the same spacing.
 */
inline std::vector<std::vector<double>> blob_centers(std::size_t n_classes, std::size_t n_dims, double spread,
                                                     std::uint64_t seed) {
    if (n_classes < 2) {
        throw std::invalid_argument("make_blobs: n_classes must be at least 2");
    }
    if (n_dims == 0) {
        throw std::invalid_argument("make_blobs: n_dims must be positive");
    }
    if (!(spread > 0.0) || !std::isfinite(spread)) {
        throw std::invalid_argument("make_blobs: spread must be positive and finite");
    }
    const double gap = 6.0 * spread;
    std::vector<std::vector<double>> centers(n_classes, std::vector<double>(n_dims, 0.0));
    if (n_dims == 1) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            centers[c][0] = (static_cast<double>(c) - static_cast<double>(n_classes - 1) / 2.0) * gap;
        }
        return centers;
    }

    std::mt19937_64 rng(derive_seed(seed, 0xce27e5));
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> u(n_dims), v(n_dims);
    auto normalize = [](std::vector<double>& x) {
        double n = 0.0;
        for (double e : x) {
            n += e * e;
        }
        n = std::sqrt(n);
        for (double& e : x) {
            e /= n;
        }
    };
    for (double& e : u) {
        e = g(rng);
    }
    normalize(u);
    do {
        for (double& e : v) {
            e = g(rng);
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < n_dims; ++j) {
            dot += u[j] * v[j];
        }
        for (std::size_t j = 0; j < n_dims; ++j) {
            v[j] -= dot * u[j];
        }
        double n = 0.0;
        for (double e : v) {
            n += e * e;
        }
        if (n > 1e-12) {
            break;
        }
    } while (true);
    normalize(v);

    const double k = static_cast<double>(n_classes);
    const double radius = gap / (2.0 * std::sin(std::numbers::pi / k));
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double angle = phase + 2.0 * std::numbers::pi * static_cast<double>(c) / k;
        for (std::size_t j = 0; j < n_dims; ++j) {
            centers[c][j] = radius * (std::cos(angle) * u[j] + std::sin(angle) * v[j]);
        }
    }
    return centers;
}

/// Balanced Gaussian blobs (std = spread) around blob_centers, in shuffled order.
inline Dataset make_blobs(std::size_t n_samples, std::size_t n_classes, std::size_t n_dims, double spread,
                          std::uint64_t seed) {
    const auto centers = blob_centers(n_classes, n_dims, spread, seed);
    std::mt19937_64 rng(derive_seed(seed, 0xb10b5));
    std::normal_distribution<double> noise(0.0, spread);

    std::vector<std::size_t> labels(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        labels[i] = i % n_classes;
    }
    std::shuffle(labels.begin(), labels.end(), rng);

    Dataset out{n_dims, n_classes, std::vector<double>(n_samples * n_dims), std::move(labels)};
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto& c = centers[out.labels[i]];
        for (std::size_t j = 0; j < n_dims; ++j) {
            out.features[i * n_dims + j] = c[j] + noise(rng);
        }
    }
    return out;
}

class DatasetParseError : public std::runtime_error {
public:
    DatasetParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/*
 * CSV with header f0,...,f{d-1},label. n_classes is max label + 1 unless
 * n_classes_hint is larger.
 */
inline Dataset read_dataset_csv(std::istream& in, std::size_t n_classes_hint = 0) {
    std::string line;
    std::size_t lineno = 0;
    auto split = [](std::string_view s) {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true) {
            const auto pos = s.find(',', start);
            out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos) {
                break;
            }
            start = pos + 1;
        }
        return out;
    };
    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') {
            s.pop_back();
        }
    };

    if (!std::getline(in, line)) {
        throw DatasetParseError(1, "missing header");
    }
    ++lineno;
    strip_cr(line);
    const auto header = split(line);
    if (header.size() < 2 || header.back() != "label") {
        throw DatasetParseError(lineno, "header must be f0,...,f{d-1},label");
    }
    for (std::size_t j = 0; j + 1 < header.size(); ++j) {
        if (header[j] != "f" + std::to_string(j)) {
            throw DatasetParseError(lineno, "expected column 'f" + std::to_string(j) + "', got '" +
                                                std::string(header[j]) + "'");
        }
    }

    Dataset out;
    out.n_dims = header.size() - 1;
    std::size_t max_label = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw DatasetParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < out.n_dims; ++j) {
            double x = 0.0;
            const auto* b = cells[j].data();
            const auto* e = b + cells[j].size();
            const auto r = std::from_chars(b, e, x);
            if (r.ec != std::errc{} || r.ptr != e || !std::isfinite(x)) {
                throw DatasetParseError(lineno, "bad feature value '" + std::string(cells[j]) + "'");
            }
            out.features.push_back(x);
        }
        std::size_t label = 0;
        const auto& cell = cells.back();
        const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (r.ec != std::errc{} || r.ptr != cell.data() + cell.size()) {
            throw DatasetParseError(lineno, "bad label '" + std::string(cell) + "'");
        }
        out.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    if (out.labels.empty()) {
        throw DatasetParseError(lineno, "no samples");
    }
    out.n_classes = std::max(max_label + 1, n_classes_hint);
    return out;
}

inline Dataset read_dataset_csv_file(const std::string& path, std::size_t n_classes_hint = 0) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dataset file '" + path + "'");
    }
    return read_dataset_csv(in, n_classes_hint);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t j = 0; j < d.n_dims; ++j) {
        out << 'f' << j << ',';
    }
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (double x : d.sample(i)) {
            const auto r = std::to_chars(buf, buf + sizeof buf, x);
            out.write(buf, r.ptr - buf);
            out << ',';
        }
        out << d.labels[i] << '\n';
    }
}

}  // namespace fedlad::learning

#endif  // FEDLAD_LEARNING_DATASET_HPP
