#pragma once

#include <array>
#include <span>
#include <vector>

#include "noma/gmm.hpp"
#include "noma/signal_model.hpp"

namespace noma {

/// Everything one SIC stage learned about the user it peeled off.
struct StageEstimate {
    std::array<Complex, 4> centroids{};
    double phase_rotation = 0.0;       ///< theta, in (-pi/4, pi/4]
    Complex channel_estimate{};        ///< h-hat
    std::vector<int> symbols;          ///< detected indices for this stage
    std::vector<IqSample> residual;    ///< stage input minus h-hat * x-hat
    int em_iterations = 0;
    bool em_converged = false;
    bool fallback_init = false;
    bool erased = false;               ///< stage skipped after a vanishing channel estimate
};

struct SicResult {
    /// One entry per stage, in the order the stages ran.
    std::vector<StageEstimate> stages;
    /// Row r holds the symbols of the r-th strongest estimated user.
    SymbolMatrix detected;
    /// detection_order[r] is the stage whose symbols fill row r.
    std::vector<int> detection_order;
    bool erasure = false;

    const StageEstimate& row_estimate(int row) const { return stages[detection_order[row]]; }
};

/// Circular mean of the four centroids' offsets from the canonical QPSK phases
/// (taken modulo pi/2), reduced to (-pi/4, pi/4]. Throws DegenerateCentroid on
/// a zero centroid.
double estimate_phase_rotation(std::span<const Complex, 4> centroids);

/// Canonical QPSK index matched to each centroid after de-rotating by theta.
std::array<int, 4> match_centroids(std::span<const Complex, 4> centroids, double theta);

/// De-rotates by e^{-j theta} and slices by quadrant.
std::vector<int> detect_symbols(std::span<const IqSample> samples, double theta);

/// Mean of centroid_k / s_k over the four centroids, s_k the matched canonical point.
Complex estimate_channel(std::span<const Complex, 4> centroids, double theta);

/// Blind 4th-power phase estimate of a QPSK-like cloud, in (-pi/4, pi/4]:
/// arg(-sum y^4) / 4. Zero when the samples carry no 4-fold structure.
double coarse_phase(std::span<const IqSample> samples);

struct SicOptions {
    /// De-rotate each stage's residual by `coarse_phase` before the quadrant
    /// split (the fitted means are rotated back). Off reproduces the plain
    /// axis-aligned quadrant initialization.
    bool coarse_derotation = true;
};

/// Below this |h-hat|, or when a fitted centroid sits this close to the
/// origin, the remaining stages are declared erasures.
inline constexpr double kChannelFloor = 1e-12;

/// Blind SIC: per stage fit a 4-component GMM to the residual, estimate theta
/// and h-hat from the centroids, detect, and cancel h-hat * x-hat.
SicResult sic_detect(const ReceivedBlock& received, int users, const gmm::EmConfig& em = {},
                     const SicOptions& options = {});

/// Largest M^K the exhaustive detector accepts.
inline constexpr long kMaxHypotheses = 65536;

/// Joint ML with known channels: per sample argmin over S^K of |y - h^T s|^2.
/// Ties resolve to the lexicographically smallest tuple (user 0 most significant).
SymbolMatrix ml_detect_full_csi(const ReceivedBlock& received,
                                std::span<const ChannelRealization> channels);

enum class AlignmentMode {
    Genie,   ///< undo the pi/2 ambiguity using the true channels
    Strict,  ///< keep the receiver's raw labels
};

struct AlignmentReport {
    SymbolMatrix aligned;        ///< row u is true user u
    std::vector<int> user_of_row;  ///< receiver row r was scored against this user
    std::vector<int> quarter_turns;  ///< per true user; aligned = detected - k (mod 4)
    bool permutation_searched = false;
};

/// Maps receiver rows to users (strongest true |h|^2 first, with a full
/// permutation search when two users' powers sit within 0.1 dB) and, in Genie
/// mode, picks per user the k in 0..3 minimizing |h-hat e^{jk pi/2} - h|.
AlignmentReport align_labels(const SymbolMatrix& detected, const Frame& truth,
                             std::span<const ChannelRealization> channels,
                             const SicResult& estimates,
                             AlignmentMode mode = AlignmentMode::Genie);

}  // namespace noma
