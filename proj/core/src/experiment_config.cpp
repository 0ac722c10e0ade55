#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "noma/errors.hpp"
#include "noma/harness.hpp"

namespace noma {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

struct Entry {
    std::string value;
    int line;
};

double to_double(const Entry& e, std::string_view key, std::string_view text) {
    const std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ConfigError(e.line, "'" + std::string(key) + "' expects a number, got '" + s + "'");
    return v;
}

template <typename Int>
Int to_int(const Entry& e, std::string_view key) {
    Int v{};
    const auto& s = e.value;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(e.line, "'" + std::string(key) + "' expects an integer, got '" + s + "'");
    return v;
}

bool to_bool(const Entry& e, std::string_view key) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError(e.line, "'" + std::string(key) + "' expects true or false");
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text) {
    static const char* const kKnown[] = {
        "K", "N", "snr_grid_db", "frames_per_point", "min_errors", "noise_power", "seed",
        "detectors", "alignment", "em_epsilon", "em_max_iterations", "em_weights_fixed",
        "em_covariance_floor", "em_likelihood", "em_covariance_model"};

    std::map<std::string, Entry, std::less<>> entries;
    int number = 0;
    for (auto raw : split(text, '\n')) {
        ++number;
        auto line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(number, "expected 'key = value', got '" + std::string(line) + "'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown))
            throw ConfigError(number, "unknown key '" + std::string(key) + "'");
        if (value.empty()) throw ConfigError(number, "empty value for '" + std::string(key) + "'");
        if (entries.contains(key))
            throw ConfigError(number, "duplicate key '" + std::string(key) + "'");
        entries.emplace(std::string(key), Entry{std::string(value), number});
    }

    const auto require = [&](std::string_view key) -> const Entry& {
        const auto it = entries.find(key);
        if (it == entries.end()) throw ConfigError(0, "missing required key '" + std::string(key) + "'");
        return it->second;
    };
    const auto find = [&](std::string_view key) -> const Entry* {
        const auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };

    ExperimentConfig c;
    c.users = to_int<int>(require("K"), "K");
    if (c.users < 1) throw ConfigError(require("K").line, "'K' must be at least 1");
    c.frame_length = to_int<int>(require("N"), "N");
    if (c.frame_length < 1) throw ConfigError(require("N").line, "'N' must be at least 1");

    const Entry& grid = require("snr_grid_db");
    const bool tuples = grid.value.find(';') != std::string::npos || c.users > 1;
    if (tuples) {
        for (auto point : split(grid.value, ';')) {
            if (point.empty()) continue;
            std::vector<double> tuple;
            for (auto v : split(point, ',')) tuple.push_back(to_double(grid, "snr_grid_db", v));
            if (tuple.size() != static_cast<std::size_t>(c.users))
                throw ConfigError(grid.line, "SNR point '" + std::string(point) + "' has " +
                                                 std::to_string(tuple.size()) +
                                                 " values but K = " + std::to_string(c.users));
            c.snr_grid_db.push_back(std::move(tuple));
        }
    } else {
        for (auto v : split(grid.value, ','))
            c.snr_grid_db.push_back({to_double(grid, "snr_grid_db", v)});
    }
    if (c.snr_grid_db.empty()) throw ConfigError(grid.line, "'snr_grid_db' has no points");

    if (const auto* e = find("frames_per_point")) {
        c.frames_per_point = to_int<int>(*e, "frames_per_point");
        if (c.frames_per_point < 1) throw ConfigError(e->line, "'frames_per_point' must be at least 1");
    }
    if (const auto* e = find("min_errors")) c.min_errors = to_int<long>(*e, "min_errors");
    if (const auto* e = find("noise_power")) {
        c.noise_power = to_double(*e, "noise_power", e->value);
        if (!(c.noise_power > 0.0)) throw ConfigError(e->line, "'noise_power' must be positive");
    }
    if (const auto* e = find("seed")) c.seed = to_int<std::uint64_t>(*e, "seed");
    if (const auto* e = find("detectors")) {
        c.detectors.clear();
        for (auto name : split(e->value, ',')) {
            try {
                c.detectors.push_back(parse_detector(name));
            } catch (const InvalidParameter& ex) {
                throw ConfigError(e->line, ex.what());
            }
        }
    }
    if (const auto* e = find("alignment")) {
        try {
            c.alignment = parse_alignment(e->value);
        } catch (const InvalidParameter& ex) {
            throw ConfigError(e->line, ex.what());
        }
    }
    if (const auto* e = find("em_epsilon"); e && e->value != "auto") {
        c.em.epsilon = to_double(*e, "em_epsilon", e->value);
        if (!(*c.em.epsilon > 0.0)) throw ConfigError(e->line, "'em_epsilon' must be positive");
    }
    if (const auto* e = find("em_max_iterations")) {
        c.em.max_iterations = to_int<int>(*e, "em_max_iterations");
        if (c.em.max_iterations < 1) throw ConfigError(e->line, "'em_max_iterations' must be at least 1");
    }
    if (const auto* e = find("em_weights_fixed")) c.em.weights_fixed = to_bool(*e, "em_weights_fixed");
    if (const auto* e = find("em_covariance_floor")) {
        c.em.covariance_floor = to_double(*e, "em_covariance_floor", e->value);
        if (!(c.em.covariance_floor > 0.0))
            throw ConfigError(e->line, "'em_covariance_floor' must be positive");
    }
    if (const auto* e = find("em_likelihood")) {
        if (e->value == "hard") c.em.likelihood = gmm::LikelihoodKind::Hard;
        else if (e->value == "soft") c.em.likelihood = gmm::LikelihoodKind::Soft;
        else throw ConfigError(e->line, "'em_likelihood' must be hard or soft");
    }
    if (const auto* e = find("em_covariance_model")) {
        if (e->value == "full") c.em.covariance_model = gmm::CovarianceModel::Full;
        else if (e->value == "spherical-shared") c.em.covariance_model = gmm::CovarianceModel::SphericalShared;
        else throw ConfigError(e->line, "'em_covariance_model' must be full or spherical-shared");
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_experiment_config(text.str());
}

std::string format_experiment_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "K = " << c.users << '\n' << "N = " << c.frame_length << '\n' << "snr_grid_db = ";
    for (std::size_t p = 0; p < c.snr_grid_db.size(); ++p) {
        if (p) out << "; ";
        for (std::size_t u = 0; u < c.snr_grid_db[p].size(); ++u)
            out << (u ? "," : "") << fmt17(c.snr_grid_db[p][u]);
    }
    out << '\n'
        << "frames_per_point = " << c.frames_per_point << '\n'
        << "min_errors = " << c.min_errors << '\n'
        << "noise_power = " << fmt17(c.noise_power) << '\n'
        << "seed = " << c.seed << '\n'
        << "detectors = ";
    for (std::size_t d = 0; d < c.detectors.size(); ++d) out << (d ? "," : "") << to_string(c.detectors[d]);
    out << '\n'
        << "alignment = " << to_string(c.alignment) << '\n'
        << "em_epsilon = " << (c.em.epsilon ? fmt17(*c.em.epsilon) : std::string("auto")) << '\n'
        << "em_max_iterations = " << c.em.max_iterations << '\n'
        << "em_weights_fixed = " << (c.em.weights_fixed ? "true" : "false") << '\n'
        << "em_covariance_floor = " << fmt17(c.em.covariance_floor) << '\n'
        << "em_likelihood = " << (c.em.likelihood == gmm::LikelihoodKind::Hard ? "hard" : "soft") << '\n'
        << "em_covariance_model = "
        << (c.em.covariance_model == gmm::CovarianceModel::Full ? "full" : "spherical-shared") << '\n';
    return out.str();
}

}  // namespace noma
