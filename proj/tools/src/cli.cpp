#include "noma/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "noma/errors.hpp"

namespace noma::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_complex(Complex z) {
    return "(" + fmt(z.real(), "%+.5f") + ", " + fmt(z.imag(), "%+.5f") + "j)";
}

std::string join_db(std::span<const double> v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i], "%g");
    return s;
}

// --seed, then NOMA_CLUSTER_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    const char* env = std::getenv("NOMA_CLUSTER_SEED");
    if (env == nullptr || *env == '\0') return fallback;
    std::uint64_t value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc{} || ptr != end)
        throw InvalidParameter(std::string("NOMA_CLUSTER_SEED is not an unsigned integer: ") + env);
    return value;
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream file(path);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file.exceptions(std::ios::badbit);
    return file;
}

RunHooks progress_hooks(std::ostream& err, int verbosity, const std::string& label,
                        std::size_t points) {
    RunHooks hooks;
    if (verbosity < 1) return hooks;
    hooks.on_point = [&err, label, points](std::size_t p, const std::vector<SerRecord>& recs) {
        std::ostringstream line;
        line << label << "point " << (p + 1) << "/" << points;
        if (!recs.empty()) line << " snr_db=" << join_db(recs.front().snr_tuple_db);
        if (!recs.empty()) line << " frames=" << recs.front().frames;
        for (const auto& r : recs)
            line << " " << to_string(r.detector) << ":u" << r.user << "=" << r.errors;
        err << line.str() << '\n';
    };
    return hooks;
}

void write_sweep_outputs(const ResultTable& table, const fs::path& dir) {
    ensure_directory(dir);
    write_results(table, dir / "results.csv");
    if (!table.empty()) emit_plot_data(table, dir);
}

struct Options {
    int verbosity = 1;
    // sweep
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    // frame
    int users = 0;
    int length = 0;
    std::vector<double> snr_db;
    // figures
    double scale = 1.0;
};

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
    ExperimentConfig config = load_experiment_config(opt.config_path);
    config.seed = resolve_seed(opt.seed, config.seed);
    config.validate();
    if (opt.verbosity >= 2) err << format_experiment_config(config);

    const fs::path dir = opt.out_dir;
    ensure_directory(dir);
    const auto table = run_sweep(config, opt.workers ? opt.workers : default_workers(),
                                 progress_hooks(err, opt.verbosity, "", config.snr_grid_db.size()));
    write_sweep_outputs(table, dir);
    out << "wrote " << table.size() << " records to " << (dir / "results.csv").string() << '\n';
    return kExitOk;
}

int cmd_frame(const Options& opt, std::ostream& out, std::ostream& err) {
    if (opt.users < 1) throw InvalidParameter("--k must be at least 1");
    if (opt.length < 1) throw InvalidParameter("--n must be at least 1");
    if (opt.snr_db.size() != static_cast<std::size_t>(opt.users))
        throw InvalidParameter("--snr-db needs exactly K values");
    const std::uint64_t seed = resolve_seed(opt.seed, kDefaultSeed);
    const double noise = 1.0;

    std::vector<double> betas;
    for (double db : opt.snr_db) betas.push_back(db_to_linear(db) * noise);
    const auto sim = simulate_frame(betas, opt.length, noise, point_stream(seed, 0).substream(0));
    const int users = opt.users;
    const int n = opt.length;

    const SicResult sic = sic_detect(sim.block, users);
    const AlignmentReport aligned = align_labels(sic.detected, sim.frame, sim.channels, sic);
    std::optional<SymbolMatrix> ml;
    try {
        ml = ml_detect_full_csi(sim.block, sim.channels);
    } catch (const CapacityExceeded& e) {
        if (opt.verbosity >= 1) err << "ml-csi skipped: " << e.what() << '\n';
    }

    const fs::path dir = opt.out_dir;
    ensure_directory(dir);

    {
        auto scatter = open_output(dir / "scatter.dat");
        scatter << "# i q label\n# label: transmitted symbol tuple in base 4, user 1 most significant\n";
        for (int i = 0; i < n; ++i) {
            int label = 0;
            for (int u = 0; u < users; ++u) label = label * 4 + sim.frame.at(u, i);
            const Complex y = sim.block.samples[static_cast<std::size_t>(i)];
            scatter << fmt(y.real(), "%.17g") << ' ' << fmt(y.imag(), "%.17g") << ' ' << label
                    << '\n';
        }
    }

    std::ostringstream rep;
    rep << "K=" << users << " N=" << n << " snr_db=" << join_db(opt.snr_db) << " seed=" << seed
        << " noise_power=" << fmt(noise) << "\n\n";
    rep << "channels (true)\n";
    for (int u = 0; u < users; ++u) {
        const Complex h = sim.channels[static_cast<std::size_t>(u)].h;
        rep << "  user " << (u + 1) << ": h=" << fmt_complex(h) << " |h|^2=" << fmt(std::norm(h))
            << " arg=" << fmt(std::arg(h)) << '\n';
    }
    rep << "\nSIC stages\n";
    for (std::size_t s = 0; s < sic.stages.size(); ++s) {
        const auto& st = sic.stages[s];
        rep << "  stage " << (s + 1) << (st.erased ? " (erased)" : "") << ": em_iterations="
            << st.em_iterations << " converged=" << (st.em_converged ? "yes" : "no")
            << " fallback_init=" << (st.fallback_init ? "yes" : "no") << '\n';
        rep << "    centroids:";
        for (const auto& c : st.centroids) rep << ' ' << fmt_complex(c);
        rep << "\n    theta=" << fmt(st.phase_rotation) << " h_hat=" << fmt_complex(st.channel_estimate)
            << '\n';
    }
    rep << "\nper-user results (rows matched to users by true channel power)\n";
    for (int r = 0; r < users; ++r) {
        const int u = aligned.user_of_row[static_cast<std::size_t>(r)];
        const auto& st = sic.row_estimate(r);
        const Complex h = sim.channels[static_cast<std::size_t>(u)].h;
        const int k = aligned.quarter_turns[static_cast<std::size_t>(u)];
        long gmm_errors = 0;
        long ml_errors = 0;
        for (int i = 0; i < n; ++i) {
            gmm_errors += aligned.aligned.at(u, i) != sim.frame.at(u, i) ? 1 : 0;
            if (ml) ml_errors += ml->at(u, i) != sim.frame.at(u, i) ? 1 : 0;
        }
        const Complex h_aligned = st.channel_estimate * std::polar(1.0, k * kPi / 2);
        rep << "  user " << (u + 1) << ": receiver row " << (r + 1) << " quarter_turns=" << k
            << " h_hat(aligned)=" << fmt_complex(h_aligned) << " |h_hat-h|=" << fmt(std::abs(h_aligned - h))
            << "\n    gmm-sic errors=" << gmm_errors << "/" << n;
        if (ml) rep << " ml-csi errors=" << ml_errors << "/" << n;
        rep << '\n';
    }
    rep << "\nsymbols (first 32): user: true / gmm-sic" << (ml ? " / ml-csi" : "") << '\n';
    const int shown = std::min(n, 32);
    for (int u = 0; u < users; ++u) {
        const auto line = [&](const SymbolMatrix& m) {
            std::string s;
            for (int i = 0; i < shown; ++i) s += static_cast<char>('0' + m.at(u, i));
            return s;
        };
        rep << "  " << (u + 1) << ": " << line(sim.frame) << " / " << line(aligned.aligned);
        if (ml) rep << " / " << line(*ml);
        rep << '\n';
    }

    {
        auto report = open_output(dir / "report.txt");
        report << rep.str();
    }
    if (opt.verbosity >= 1) out << rep.str();
    return kExitOk;
}

int cmd_figures(const Options& opt, std::ostream& out, std::ostream& err) {
    if (!(opt.scale > 0.0) || !std::isfinite(opt.scale))
        throw InvalidParameter("--scale must be a positive number");
    const std::uint64_t seed = resolve_seed(opt.seed, kDefaultSeed);
    const unsigned workers = opt.workers ? opt.workers : default_workers();
    const fs::path root = opt.out_dir;
    ensure_directory(root);
    for (const auto& fig : figure_configs(opt.scale, seed)) {
        const auto table = run_sweep(fig.config, workers,
                                     progress_hooks(err, opt.verbosity, fig.name + " ",
                                                    fig.config.snr_grid_db.size()));
        write_sweep_outputs(table, root / fig.name);
        out << fig.name << ": " << table.size() << " records\n";
    }
    return kExitOk;
}

std::vector<std::vector<double>> gap_grid(int users, double gap_db, double lo, double hi) {
    std::vector<std::vector<double>> grid;
    for (double g = lo; g <= hi + 1e-9; g += 1.0) {
        std::vector<double> tuple;
        for (int u = 0; u < users; ++u) tuple.push_back(g - gap_db * u);
        grid.push_back(std::move(tuple));
    }
    return grid;
}

}  // namespace

std::vector<FigureConfig> figure_configs(double scale, std::uint64_t seed) {
    const auto scaled = [scale](long full) {
        return std::max(1L, static_cast<long>(std::llround(static_cast<double>(full) * scale)));
    };
    const auto make = [&](int users, int n, double gap, double lo, double hi) {
        ExperimentConfig c;
        c.users = users;
        c.frame_length = n;
        c.snr_grid_db = gap_grid(users, gap, lo, hi);
        c.frames_per_point = static_cast<int>(scaled(2000));
        c.min_errors = scaled(400);
        c.seed = seed;
        return c;
    };
    std::vector<FigureConfig> figs;
    const char suffix[] = {'a', 'b', 'c'};
    const int lengths[] = {500, 100, 50};
    for (int i = 0; i < 3; ++i)
        figs.push_back({std::string("fig2") + suffix[i], make(1, lengths[i], 0.0, 0.0, 40.0)});
    for (int i = 0; i < 3; ++i)
        figs.push_back({std::string("fig3") + suffix[i], make(2, lengths[i], 3.0, 3.0, 43.0)});
    for (int i = 0; i < 3; ++i)
        figs.push_back({std::string("fig4") + suffix[i], make(2, lengths[i], 6.0, 6.0, 46.0)});
    figs.push_back({"fig5", make(3, 500, 6.0, 12.0, 52.0)});
    return figs;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"Blind GMM-clustering NOMA receiver simulator", "noma-cluster"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", "noma-cluster 0.1.0");
    app.footer(
        "Commands:\n"
        "  sweep   --config PATH --out DIR [--seed U64] [--workers N]\n"
        "  frame   --k K --n N --snr-db a,b,... --out DIR [--seed U64]\n"
        "  figures --out DIR [--scale F] [--seed U64] [--workers N]\n"
        "\n"
        "The seed falls back to NOMA_CLUSTER_SEED, then to the config file (sweep) or 1.\n"
        "Exit status: 0 success, 2 usage or config error, 3 I/O error, 4 internal error.");
    int verbose = 0;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "More output (repeatable)");
    app.add_flag("-q,--quiet", quiet, "Suppress progress output");

    const auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed,
                        "RNG seed (fallback: NOMA_CLUSTER_SEED, then the built-in default)");
    };

    auto* sweep = app.add_subcommand("sweep", "Run an SNR sweep from a config file");
    sweep->add_option("--config", opt.config_path, "Experiment config file")->required();
    sweep->add_option("--out", opt.out_dir, "Output directory")->required();
    add_seed(sweep);
    sweep->add_option("--workers", opt.workers, "Worker threads (default: available cores)")
        ->check(CLI::PositiveNumber);

    auto* frame = app.add_subcommand("frame", "Simulate and dissect a single frame");
    frame->add_option("--k", opt.users, "Number of users")->required();
    frame->add_option("--n", opt.length, "Frame length in symbols")->required();
    frame->add_option("--snr-db", opt.snr_db, "Per-user SNR in dB, comma separated")
        ->required()
        ->delimiter(',');
    add_seed(frame);
    frame->add_option("--out", opt.out_dir, "Output directory")->required();

    auto* figures = app.add_subcommand("figures", "Run the bundled figure sweeps");
    figures->add_option("--out", opt.out_dir, "Output directory")->required();
    figures->add_option("--scale", opt.scale, "Fraction of the full frame budget")->capture_default_str();
    add_seed(figures);
    figures->add_option("--workers", opt.workers, "Worker threads (default: available cores)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    opt.verbosity = quiet ? 0 : 1 + verbose;

    try {
        if (sweep->parsed()) return cmd_sweep(opt, out, err);
        if (frame->parsed()) return cmd_frame(opt, out, err);
        return cmd_figures(opt, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << opt.config_path << ": " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidParameter& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace noma::cli
