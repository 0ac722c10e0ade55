#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "noma/gmm.hpp"
#include "noma/receiver.hpp"
#include "noma/signal_model.hpp"

namespace noma {

enum class DetectorKind { GmmSic, MlCsi };

std::string_view to_string(DetectorKind kind) noexcept;
/// Accepts "gmm-sic" and "ml-csi"; throws InvalidParameter otherwise.
DetectorKind parse_detector(std::string_view name);

std::string_view to_string(AlignmentMode mode) noexcept;
AlignmentMode parse_alignment(std::string_view name);

struct ExperimentConfig {
    int users = 1;                                  ///< K
    int frame_length = 500;                         ///< N
    std::vector<std::vector<double>> snr_grid_db;   ///< per point, one SNR per user
    int frames_per_point = 1000;
    long min_errors = 400;                          ///< early stop once every record has this many
    double noise_power = 1.0;
    std::uint64_t seed = 1;
    std::vector<DetectorKind> detectors{DetectorKind::GmmSic, DetectorKind::MlCsi};
    gmm::EmConfig em{};
    AlignmentMode alignment = AlignmentMode::Genie;

    /// Throws InvalidParameter on inconsistent fields.
    void validate() const;
};

struct SerRecord {
    DetectorKind detector = DetectorKind::GmmSic;
    int users = 0;
    int frame_length = 0;
    int user = 1;  ///< 1-based
    std::vector<double> snr_tuple_db;
    std::uint64_t frames = 0;
    std::uint64_t symbols = 0;
    std::uint64_t errors = 0;
    std::uint64_t seed = 0;

    double snr_user_db() const { return snr_tuple_db.at(static_cast<std::size_t>(user - 1)); }
    double ser() const;
    /// Half-width of the 95% Wilson score interval.
    double ci95() const;

    friend bool operator==(const SerRecord&, const SerRecord&) = default;
};

using ResultTable = std::vector<SerRecord>;

double wilson_half_width(std::uint64_t errors, std::uint64_t trials, double z = 1.959963984540054);

/// Closed-form SER of coherent unit-energy QPSK over Rayleigh fading with mean SNR gamma (linear).
double qpsk_rayleigh_ser(double gamma);

/// Passed to the frame observer once per detector invocation.
struct DetectorInvocation {
    std::size_t point = 0;
    std::uint64_t frame = 0;
    DetectorKind detector = DetectorKind::GmmSic;
    std::uint64_t block_digest = 0;
};

struct RunHooks {
    std::function<void(const DetectorInvocation&)> on_detector;
    /// Called once per finished grid point (serialized, completion order).
    std::function<void(std::size_t point, const std::vector<SerRecord>&)> on_point;
};

/// FNV-1a over the raw bytes of the samples and noise power.
std::uint64_t block_digest(const ReceivedBlock& block);

/// Substream used for grid point `index` of a sweep seeded with `seed`.
RandomStream point_stream(std::uint64_t seed, std::size_t index);

struct SimulatedFrame {
    std::vector<ChannelRealization> channels;
    Frame frame;
    ReceivedBlock block;
};

/// Draws one block-fading frame (channels, symbols, noise) from the fixed
/// per-purpose substreams of `frame_stream`. betas[u] is user u's channel power.
SimulatedFrame simulate_frame(std::span<const double> betas, int length, double noise_power,
                              const RandomStream& frame_stream);

/// Simulates frames at one SNR tuple, running every enabled detector on the
/// same received block. Records are ordered detector-major, then user.
std::vector<SerRecord> run_point(const ExperimentConfig& config,
                                 std::span<const double> snr_tuple_db, RandomStream stream,
                                 const RunHooks& hooks = {}, std::size_t point_index = 0);

/// Maps run_point over the grid; `workers` threads share the points. Output
/// is in grid order and independent of `workers`.
ResultTable run_sweep(const ExperimentConfig& config, unsigned workers = 1,
                      const RunHooks& hooks = {});

inline constexpr std::string_view kCsvHeader =
    "detector,K,N,user,snr_user_db,snr_tuple_db,frames,symbols,errors,ser,ci95,seed";

void write_results(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_results(const std::filesystem::path& path);

/// Writes one whitespace-separated SER-vs-SNR file per (K, N) into `directory`
/// plus a README describing the columns. Returns the data files written.
std::vector<std::filesystem::path> emit_plot_data(const ResultTable& table,
                                                  const std::filesystem::path& directory);

/// Parses the flat `key = value` experiment format. Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace noma
