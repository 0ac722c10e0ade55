#include "noma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "noma/errors.hpp"

namespace noma {

std::string_view to_string(DetectorKind kind) noexcept {
    return kind == DetectorKind::GmmSic ? "gmm-sic" : "ml-csi";
}

DetectorKind parse_detector(std::string_view name) {
    if (name == "gmm-sic") return DetectorKind::GmmSic;
    if (name == "ml-csi") return DetectorKind::MlCsi;
    throw InvalidParameter("unknown detector '" + std::string(name) + "'");
}

std::string_view to_string(AlignmentMode mode) noexcept {
    return mode == AlignmentMode::Genie ? "genie" : "strict";
}

AlignmentMode parse_alignment(std::string_view name) {
    if (name == "genie") return AlignmentMode::Genie;
    if (name == "strict") return AlignmentMode::Strict;
    throw InvalidParameter("unknown alignment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
    if (users < 1) throw InvalidParameter("K must be at least 1");
    if (frame_length < 1) throw InvalidParameter("N must be at least 1");
    if (frames_per_point < 1) throw InvalidParameter("frames_per_point must be at least 1");
    if (!(noise_power > 0.0)) throw InvalidParameter("noise_power must be positive");
    if (detectors.empty()) throw InvalidParameter("at least one detector is required");
    for (std::size_t p = 0; p < snr_grid_db.size(); ++p) {
        if (snr_grid_db[p].size() != static_cast<std::size_t>(users))
            throw InvalidParameter("SNR point " + std::to_string(p + 1) + " has " +
                                   std::to_string(snr_grid_db[p].size()) + " entries, expected K = " +
                                   std::to_string(users));
        for (double v : snr_grid_db[p])
            if (!std::isfinite(v)) throw InvalidParameter("SNR values must be finite");
    }
    em.validate();
}

double SerRecord::ser() const {
    return symbols == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(symbols);
}

double SerRecord::ci95() const { return wilson_half_width(errors, symbols); }

double wilson_half_width(std::uint64_t errors, std::uint64_t trials, double z) {
    if (trials == 0) return 0.0;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    return z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
}

double qpsk_rayleigh_ser(double gamma) {
    if (!(gamma >= 0.0)) throw InvalidParameter("qpsk_rayleigh_ser: gamma must be >= 0");
    const double g = gamma / 2.0;
    const double mu = std::sqrt(g / (1.0 + g));
    const double cross = mu > 0.0 ? mu * std::atan(1.0 / mu) : 0.0;
    return (1.0 - mu) - 0.25 * (1.0 - 4.0 / kPi * cross);
}

std::uint64_t block_digest(const ReceivedBlock& block) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&h](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix(block.samples.data(), block.samples.size() * sizeof(IqSample));
    mix(&block.noise_power, sizeof block.noise_power);
    return h;
}

RandomStream point_stream(std::uint64_t seed, std::size_t index) {
    return RandomStream(seed).substream(index);
}

SimulatedFrame simulate_frame(std::span<const double> betas, int length, double noise_power,
                              const RandomStream& frame_stream) {
    auto channel_rng = frame_stream.substream(static_cast<std::uint64_t>(StreamPurpose::Channel));
    auto symbol_rng = frame_stream.substream(static_cast<std::uint64_t>(StreamPurpose::Symbols));
    auto noise_rng = frame_stream.substream(static_cast<std::uint64_t>(StreamPurpose::Noise));
    const int users = static_cast<int>(betas.size());
    SimulatedFrame out;
    out.channels.reserve(betas.size());
    for (int u = 0; u < users; ++u)
        out.channels.push_back(sample_channel(betas[static_cast<std::size_t>(u)], channel_rng, u));
    out.frame = generate_frame(users, length, symbol_rng);
    out.block = transmit(out.frame, out.channels, noise_power, noise_rng);
    return out;
}

namespace {

void count_errors(const SymbolMatrix& decided, const Frame& truth,
                  std::span<SerRecord> records) {
    for (int u = 0; u < truth.users(); ++u) {
        std::uint64_t errs = 0;
        const auto a = decided.row(u);
        const auto b = truth.row(u);
        for (std::size_t i = 0; i < a.size(); ++i) errs += a[i] != b[i] ? 1 : 0;
        records[static_cast<std::size_t>(u)].errors += errs;
    }
}

}  // namespace

std::vector<SerRecord> run_point(const ExperimentConfig& config,
                                 std::span<const double> snr_tuple_db, RandomStream stream,
                                 const RunHooks& hooks, std::size_t point_index) {
    config.validate();
    const int users = config.users;
    const int n = config.frame_length;
    if (snr_tuple_db.size() != static_cast<std::size_t>(users))
        throw InvalidParameter("run_point: SNR tuple length does not match K");

    std::vector<double> betas(static_cast<std::size_t>(users));
    for (int u = 0; u < users; ++u)
        betas[static_cast<std::size_t>(u)] =
            db_to_linear(snr_tuple_db[static_cast<std::size_t>(u)]) * config.noise_power;

    const std::size_t detectors = config.detectors.size();
    std::vector<SerRecord> records;
    records.reserve(detectors * static_cast<std::size_t>(users));
    for (auto kind : config.detectors)
        for (int u = 0; u < users; ++u) {
            SerRecord r;
            r.detector = kind;
            r.users = users;
            r.frame_length = n;
            r.user = u + 1;
            r.snr_tuple_db.assign(snr_tuple_db.begin(), snr_tuple_db.end());
            r.seed = config.seed;
            records.push_back(std::move(r));
        }

    for (int f = 0; f < config.frames_per_point; ++f) {
        const auto frame_stream = stream.substream(static_cast<std::uint64_t>(f));
        const auto sim = simulate_frame(betas, n, config.noise_power, frame_stream);
        const auto& channels = sim.channels;
        const auto& frame = sim.frame;
        const auto& block = sim.block;

        for (std::size_t d = 0; d < detectors; ++d) {
            const auto kind = config.detectors[d];
            if (hooks.on_detector)
                hooks.on_detector({point_index, static_cast<std::uint64_t>(f), kind,
                                   block_digest(block)});
            const std::span<SerRecord> slot(records.data() + d * static_cast<std::size_t>(users),
                                            static_cast<std::size_t>(users));
            try {
                if (kind == DetectorKind::MlCsi) {
                    count_errors(ml_detect_full_csi(block, channels), frame, slot);
                } else {
                    const auto sic = sic_detect(block, users, config.em);
                    const auto aligned =
                        align_labels(sic.detected, frame, channels, sic, config.alignment);
                    SymbolMatrix decided = aligned.aligned;
                    // An erased stage scores every symbol of its user as wrong.
                    for (int r = 0; r < users; ++r) {
                        if (!sic.row_estimate(r).erased) continue;
                        const int u = aligned.user_of_row[static_cast<std::size_t>(r)];
                        for (int i = 0; i < n; ++i)
                            decided.at(u, i) = Qpsk::rotate(frame.at(u, i), 1);
                    }
                    count_errors(decided, frame, slot);
                }
            } catch (const std::exception&) {
                for (auto& r : slot) r.errors += static_cast<std::uint64_t>(n);
            }
            for (auto& r : slot) {
                r.symbols += static_cast<std::uint64_t>(n);
                ++r.frames;
            }
        }

        if (config.min_errors > 0 &&
            std::all_of(records.begin(), records.end(), [&](const SerRecord& r) {
                return r.errors >= static_cast<std::uint64_t>(config.min_errors);
            }))
            break;
    }
    return records;
}

ResultTable run_sweep(const ExperimentConfig& config, unsigned workers, const RunHooks& hooks) {
    config.validate();
    const std::size_t points = config.snr_grid_db.size();
    std::vector<std::vector<SerRecord>> per_point(points);

    std::atomic<std::size_t> next{0};
    std::mutex hook_mutex;
    std::exception_ptr failure;

    const auto work = [&] {
        for (;;) {
            const std::size_t p = next.fetch_add(1);
            if (p >= points) return;
            try {
                RunHooks local;
                if (hooks.on_detector)
                    local.on_detector = [&](const DetectorInvocation& inv) {
                        std::lock_guard lock(hook_mutex);
                        hooks.on_detector(inv);
                    };
                per_point[p] = run_point(config, config.snr_grid_db[p],
                                         point_stream(config.seed, p), local, p);
                if (hooks.on_point) {
                    std::lock_guard lock(hook_mutex);
                    hooks.on_point(p, per_point[p]);
                }
            } catch (...) {
                std::lock_guard lock(hook_mutex);
                if (!failure) failure = std::current_exception();
                next = points;
                return;
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points)));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    ResultTable table;
    for (auto& recs : per_point)
        for (auto& r : recs) table.push_back(std::move(r));
    return table;
}

}  // namespace noma
