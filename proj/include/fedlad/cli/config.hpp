// Copyright (c) 2026 The FedLAD Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FEDLAD_CLI_CONFIG_HPP
#define FEDLAD_CLI_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedlad/aggregation/aggregators.hpp"
#include "fedlad/learning/mlp.hpp"
#include "fedlad/simulation/experiment.hpp"

namespace fedlad::cli {

/// Bad config text or value; line is 0 when it did not come from a file line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct RunConfig {
    simulation::ExperimentConfig experiment;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    /// Off by default so rounds.csv is reproducible byte for byte.
    bool record_timings = false;
};

/// section -> ordered (key, value) pairs.
using Sections = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        const auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        out.push_back(item);
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const std::string& key) {
    T value{};
    const auto* b = text.data();
    const auto* e = b + text.size();
    const auto r = std::from_chars(b, e, value);
    if (text.empty() || r.ec != std::errc{} || r.ptr != e) {
        throw ConfigError(line, "'" + key + "': cannot parse '" + text + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) {
            throw ConfigError(line, "'" + key + "': value must be finite");
        }
    }
    return value;
}

inline bool parse_bool(const std::string& text, std::size_t line, const std::string& key) {
    if (text == "true" || text == "1") {
        return true;
    }
    if (text == "false" || text == "0") {
        return false;
    }
    throw ConfigError(line, "'" + key + "': expected true or false, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, std::size_t line, const std::string& key) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) {
        out.push_back(parse_number<T>(item, line, key));
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

}  // namespace detail

/// Applies one `key = value` from `section`; unknown sections and keys are errors.
inline void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
                          std::size_t line) {
    using detail::parse_number;
    auto& e = cfg.experiment;
    const std::string name = section + "." + key;
    auto count = [&] { return parse_number<std::size_t>(value, line, name); };
    auto real = [&] { return parse_number<double>(value, line, name); };

    if (section == "experiment") {
        if (key == "n_nodes") { e.n_nodes = count(); return; }
        if (key == "rounds") { e.rounds = count(); return; }
        if (key == "malicious_ratio") { e.malicious_ratio = real(); return; }
        if (key == "dirichlet_alpha") { e.dirichlet_alpha = real(); return; }
        if (key == "training_workers") { e.training_workers = count(); return; }
        if (key == "seeds") {
            cfg.seeds = detail::parse_list<std::uint64_t>(value, line, name);
            return;
        }
    } else if (section == "attack") {
        if (key == "source") { e.attack.source = count(); return; }
        if (key == "target") { e.attack.target = count(); return; }
    } else if (section == "aggregator") {
        if (key == "kind") {
            const auto kind = aggregation::parse_aggregator(value);
            if (!kind) {
                throw ConfigError(line, "'" + name + "': unknown aggregator '" + value + "'");
            }
            e.aggregator.kind = *kind;
            return;
        }
        if (key == "trim_k") { e.aggregator.trim_k = count(); return; }
        if (key == "krum_f") { e.aggregator.krum_f = count(); return; }
        if (key == "epsilon") { e.aggregator.rref.epsilon = real(); return; }
        if (key == "workers") { e.aggregator.parallel.workers = count(); return; }
        if (key == "smallest_block") { e.aggregator.parallel.smallest_block = count(); return; }
    } else if (section == "train") {
        if (key == "local_epochs") { e.train.local_epochs = count(); return; }
        if (key == "learning_rate") { e.train.learning_rate = real(); return; }
        if (key == "batch_size") { e.train.batch_size = count(); return; }
    } else if (section == "data") {
        if (key == "csv_path") { e.data.csv_path = value; return; }
        if (key == "n_train") { e.data.n_train = count(); return; }
        if (key == "n_test") { e.data.n_test = count(); return; }
        if (key == "n_classes") { e.data.n_classes = count(); return; }
        if (key == "n_dims") { e.data.n_dims = count(); return; }
        if (key == "spread") { e.data.spread = real(); return; }
        if (key == "test_fraction") { e.data.test_fraction = real(); return; }
    } else if (section == "model") {
        if (key == "hidden") {
            e.hidden = value.empty() ? std::vector<std::size_t>{} : detail::parse_list<std::size_t>(value, line, name);
            return;
        }
        if (key == "activation") {
            const auto act = learning::parse_activation(value);
            if (!act) {
                throw ConfigError(line, "'" + name + "': expected relu or tanh, got '" + value + "'");
            }
            e.activation = *act;
            return;
        }
    } else if (section == "output") {
        if (key == "record_timings") { cfg.record_timings = detail::parse_bool(value, line, name); return; }
    } else {
        throw ConfigError(line, "unknown section [" + section + "]");
    }
    throw ConfigError(line, "unknown key '" + key + "' in [" + section + "]");
}

/// Semantic checks shared by every ingestion path.
inline void validate(const RunConfig& cfg) {
    if (cfg.seeds.empty()) {
        throw ConfigError(0, "experiment.seeds must list at least one seed");
    }
    try {
        cfg.experiment.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
    }
}

/*
 * INI-style text: `[section]` headers, `key = value` lines, `#` or `;`
 * comments. Every key must belong to a section.
 */
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(lineno, "malformed section header '" + line + "'");
            }
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(lineno, "expected 'key = value', got '" + line + "'");
        }
        if (section.empty()) {
            throw ConfigError(lineno, "key outside of any [section]");
        }
        const auto key = detail::trim(std::string_view(line).substr(0, eq));
        const auto value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(lineno, "empty key");
        }
        const auto [it, fresh] = seen.emplace(section + "." + key, lineno);
        if (!fresh) {
            throw ConfigError(lineno, "'" + section + "." + key + "' already set on line " + std::to_string(it->second));
        }
        apply_setting(cfg, section, key, value, lineno);
    }
    validate(cfg);
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Every setting, fully resolved, in a fixed order.
inline Sections to_sections(const RunConfig& cfg) {
    const auto& e = cfg.experiment;
    using detail::format_double;
    Sections s;
    s.push_back({"experiment",
                 {{"n_nodes", std::to_string(e.n_nodes)},
                  {"rounds", std::to_string(e.rounds)},
                  {"malicious_ratio", format_double(e.malicious_ratio)},
                  {"dirichlet_alpha", format_double(e.dirichlet_alpha)},
                  {"training_workers", std::to_string(e.training_workers)},
                  {"seeds", detail::join(cfg.seeds)}}});
    s.push_back({"attack", {{"source", std::to_string(e.attack.source)}, {"target", std::to_string(e.attack.target)}}});
    std::vector<std::pair<std::string, std::string>> agg{{"kind", std::string(aggregation::to_string(e.aggregator.kind))}};
    if (e.aggregator.trim_k) {
        agg.emplace_back("trim_k", std::to_string(*e.aggregator.trim_k));
    }
    if (e.aggregator.krum_f) {
        agg.emplace_back("krum_f", std::to_string(*e.aggregator.krum_f));
    }
    if (e.aggregator.rref.epsilon) {
        agg.emplace_back("epsilon", format_double(*e.aggregator.rref.epsilon));
    }
    agg.emplace_back("workers", std::to_string(e.aggregator.parallel.workers));
    if (e.aggregator.parallel.smallest_block) {
        agg.emplace_back("smallest_block", std::to_string(*e.aggregator.parallel.smallest_block));
    }
    s.push_back({"aggregator", agg});
    s.push_back({"train",
                 {{"local_epochs", std::to_string(e.train.local_epochs)},
                  {"learning_rate", format_double(e.train.learning_rate)},
                  {"batch_size", std::to_string(e.train.batch_size)}}});
    std::vector<std::pair<std::string, std::string>> data;
    if (!e.data.csv_path.empty()) {
        data.emplace_back("csv_path", e.data.csv_path);
        data.emplace_back("test_fraction", format_double(e.data.test_fraction));
    } else {
        data.emplace_back("n_train", std::to_string(e.data.n_train));
        data.emplace_back("n_test", std::to_string(e.data.n_test));
        data.emplace_back("n_classes", std::to_string(e.data.n_classes));
        data.emplace_back("n_dims", std::to_string(e.data.n_dims));
        data.emplace_back("spread", format_double(e.data.spread));
    }
    s.push_back({"data", data});
    s.push_back({"model", {{"hidden", detail::join(e.hidden)}, {"activation", std::string(learning::to_string(e.activation))}}});
    s.push_back({"output", {{"record_timings", cfg.record_timings ? "true" : "false"}}});
    return s;
}

inline RunConfig from_sections(const Sections& sections) {
    RunConfig cfg;
    for (const auto& [section, pairs] : sections) {
        for (const auto& [key, value] : pairs) {
            apply_setting(cfg, section, key, value, 0);
        }
    }
    validate(cfg);
    return cfg;
}

inline std::string to_ini(const RunConfig& cfg) {
    std::string out;
    for (const auto& [section, pairs] : to_sections(cfg)) {
        out += "[" + section + "]\n";
        for (const auto& [key, value] : pairs) {
            out += key + " = " + value + "\n";
        }
        out += "\n";
    }
    return out;
}

}  // namespace fedlad::cli

#endif  // FEDLAD_CLI_CONFIG_HPP
