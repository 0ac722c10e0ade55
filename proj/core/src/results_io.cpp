#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "noma/errors.hpp"
#include "noma/harness.hpp"

namespace noma {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_tuple(const std::vector<double>& tuple) {
    std::string out;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (i) out += '|';
        out += fmt17(tuple[i]);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(s);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path, int line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

template <typename Int>
Int parse_int(const std::string& s, const fs::path& path, int line) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError(path.string() + ":" + std::to_string(line) + ": bad integer '" + s + "'");
    return v;
}

std::ofstream open_for_write(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string figure_label(int users, int length, const std::vector<double>& tuple) {
    const char* panel = length >= 500 ? "a" : length >= 100 ? "b" : "c";
    if (users == 1) return std::string("fig2") + panel + " (point-to-point)";
    if (users == 2) {
        const double gap = tuple[0] - tuple[1];
        if (std::abs(gap - 3.0) < 1e-9) return std::string("fig3") + panel + " (two users, 3 dB gap)";
        if (std::abs(gap - 6.0) < 1e-9) return std::string("fig4") + panel + " (two users, 6 dB gap)";
        return "two users, " + fmt17(gap) + " dB gap";
    }
    if (users == 3) return "fig5 (three users)";
    return std::to_string(users) + " users";
}

}  // namespace

void write_results(const ResultTable& table, const fs::path& path) {
    auto out = open_for_write(path);
    out << kCsvHeader << '\n';
    for (const auto& r : table) {
        out << to_string(r.detector) << ',' << r.users << ',' << r.frame_length << ',' << r.user
            << ',' << fmt17(r.snr_user_db()) << ',' << join_tuple(r.snr_tuple_db) << ','
            << r.frames << ',' << r.symbols << ',' << r.errors << ',' << fmt17(r.ser()) << ','
            << fmt17(r.ci95()) << ',' << r.seed << '\n';
    }
    finish(out, path);
}

ResultTable read_results(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw IoError(path.string() + ": missing or unexpected CSV header");

    ResultTable table;
    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 12)
            throw IoError(path.string() + ":" + std::to_string(number) + ": expected 12 fields");
        SerRecord r;
        try {
            r.detector = parse_detector(f[0]);
        } catch (const InvalidParameter& e) {
            throw IoError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
        r.users = parse_int<int>(f[1], path, number);
        r.frame_length = parse_int<int>(f[2], path, number);
        r.user = parse_int<int>(f[3], path, number);
        for (const auto& v : split(f[5], '|')) r.snr_tuple_db.push_back(parse_double(v, path, number));
        r.frames = parse_int<std::uint64_t>(f[6], path, number);
        r.symbols = parse_int<std::uint64_t>(f[7], path, number);
        r.errors = parse_int<std::uint64_t>(f[8], path, number);
        r.seed = parse_int<std::uint64_t>(f[11], path, number);
        if (r.user < 1 || r.user > static_cast<int>(r.snr_tuple_db.size()))
            throw IoError(path.string() + ":" + std::to_string(number) + ": user out of range");
        table.push_back(std::move(r));
    }
    return table;
}

std::vector<fs::path> emit_plot_data(const ResultTable& table, const fs::path& directory) {
    if (table.empty()) throw InvalidParameter("emit_plot_data: empty result table");

    struct Group {
        int users;
        int length;
        std::vector<std::vector<double>> tuples;
        std::vector<std::pair<DetectorKind, int>> columns;
        std::map<std::pair<std::size_t, std::size_t>, double> cells;
    };
    std::vector<Group> groups;

    for (const auto& r : table) {
        auto g = std::find_if(groups.begin(), groups.end(), [&](const Group& x) {
            return x.users == r.users && x.length == r.frame_length;
        });
        if (g == groups.end()) {
            groups.push_back({r.users, r.frame_length, {}, {}, {}});
            g = std::prev(groups.end());
        }
        auto row = std::find(g->tuples.begin(), g->tuples.end(), r.snr_tuple_db);
        if (row == g->tuples.end()) {
            g->tuples.push_back(r.snr_tuple_db);
            row = std::prev(g->tuples.end());
        }
        const std::pair<DetectorKind, int> key{r.detector, r.user};
        auto col = std::find(g->columns.begin(), g->columns.end(), key);
        if (col == g->columns.end()) {
            g->columns.push_back(key);
            col = std::prev(g->columns.end());
        }
        g->cells[{static_cast<std::size_t>(row - g->tuples.begin()),
                  static_cast<std::size_t>(col - g->columns.begin())}] = r.ser();
    }

    std::vector<fs::path> written;
    std::ostringstream readme;
    readme << "SER plot data\n=============\n\n"
           << "Each ser_K<K>_N<N>.dat file is whitespace separated. Lines starting with '#'\n"
           << "are comments. Column 1 is the SNR of user 1 in dB; every further column is the\n"
           << "symbol error rate of one (detector, user) pair, named in the '# columns:' line.\n"
           << "Plot SER on a log axis against column 1. Missing cells are written as nan.\n\n";

    for (const auto& g : groups) {
        const fs::path file = directory / ("ser_K" + std::to_string(g.users) + "_N" +
                                           std::to_string(g.length) + ".dat");
        auto out = open_for_write(file);
        out << "# K=" << g.users << " N=" << g.length << '\n';
        out << "# columns: snr_db";
        for (const auto& [det, user] : g.columns) out << " ser[" << to_string(det) << ",user" << user << ']';
        out << '\n';
        for (std::size_t row = 0; row < g.tuples.size(); ++row) {
            out << fmt17(g.tuples[row][0]);
            for (std::size_t col = 0; col < g.columns.size(); ++col) {
                const auto it = g.cells.find({row, col});
                out << ' ' << (it == g.cells.end() ? std::string("nan") : fmt17(it->second));
            }
            out << '\n';
        }
        finish(out, file);
        written.push_back(file);

        readme << file.filename().string() << ": K=" << g.users << ", N=" << g.length
               << ", same layout as the figures config " << figure_label(g.users, g.length, g.tuples.front()) << '\n';
    }

    const fs::path readme_path = directory / "README.txt";
    auto out = open_for_write(readme_path);
    out << readme.str();
    finish(out, readme_path);
    return written;
}

}  // namespace noma
