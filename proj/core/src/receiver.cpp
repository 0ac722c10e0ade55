#include "noma/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "noma/errors.hpp"

namespace noma {

namespace {

void require_nonzero(std::span<const Complex, 4> centroids) {
    for (const auto& c : centroids)
        if (c == Complex{} || !std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw DegenerateCentroid("centroid at the origin or not finite");
}

Complex quarter_turn(int k) {
    static const std::array<Complex, 4> turns{Complex{1, 0}, Complex{0, 1}, Complex{-1, 0},
                                              Complex{0, -1}};
    return turns[static_cast<std::size_t>(((k % 4) + 4) % 4)];
}

}  // namespace

double estimate_phase_rotation(std::span<const Complex, 4> centroids) {
    require_nonzero(centroids);
    // Raising a unit phasor to the 4th power folds the pi/2 ambiguity away; the
    // canonical phases pi/4 + k pi/2 all land on -1.
    Complex acc{};
    for (const auto& c : centroids) {
        const Complex u = c / std::abs(c);
        const Complex u2 = u * u;
        acc += u2 * u2;
    }
    return std::arg(-acc) / 4.0;
}

std::array<int, 4> match_centroids(std::span<const Complex, 4> centroids, double theta) {
    const Complex derotate = std::polar(1.0, -theta);
    std::array<int, 4> match{};
    for (std::size_t k = 0; k < 4; ++k) match[k] = Qpsk::slice(centroids[k] * derotate);
    return match;
}

std::vector<int> detect_symbols(std::span<const IqSample> samples, double theta) {
    const Complex derotate = std::polar(1.0, -theta);
    std::vector<int> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(),
                   [&](IqSample y) { return Qpsk::slice(y * derotate); });
    return out;
}

Complex estimate_channel(std::span<const Complex, 4> centroids, double theta) {
    require_nonzero(centroids);
    const auto match = match_centroids(centroids, theta);
    Complex acc{};
    for (std::size_t k = 0; k < 4; ++k) acc += centroids[k] * std::conj(Qpsk::point(match[k]));
    return acc / 4.0;
}

double coarse_phase(std::span<const IqSample> samples) {
    Complex acc{};
    for (const auto& y : samples) {
        const Complex y2 = y * y;
        acc += y2 * y2;
    }
    if (acc == Complex{}) return 0.0;
    return std::arg(-acc) / 4.0;
}

SicResult sic_detect(const ReceivedBlock& received, int users, const gmm::EmConfig& em,
                     const SicOptions& options) {
    if (users < 1) throw InvalidParameter("sic_detect: K must be at least 1");
    const auto n = static_cast<int>(received.samples.size());

    SicResult result;
    result.stages.reserve(static_cast<std::size_t>(users));
    std::vector<IqSample> residual = received.samples;

    for (int stage = 0; stage < users; ++stage) {
        StageEstimate est;
        if (result.erasure) {
            est.erased = true;
            est.symbols.assign(static_cast<std::size_t>(n), 0);
            est.residual = residual;
            result.stages.push_back(std::move(est));
            continue;
        }

        const double coarse = options.coarse_derotation ? coarse_phase(residual) : 0.0;
        std::vector<IqSample> aligned = residual;
        if (coarse != 0.0) {
            const Complex derotate = std::polar(1.0, -coarse);
            for (auto& y : aligned) y *= derotate;
        }
        const auto fit = gmm::fit(aligned, em);
        const Complex rerotate = std::polar(1.0, coarse);
        for (std::size_t k = 0; k < 4; ++k)
            est.centroids[k] = gmm::to_complex(fit.state.components[k].mean) * rerotate;
        est.em_iterations = fit.iterations;
        est.em_converged = fit.converged;
        est.fallback_init = fit.fallback_init;

        const bool collapsed = std::any_of(est.centroids.begin(), est.centroids.end(),
                                           [](Complex c) { return std::abs(c) < kChannelFloor; });
        if (!collapsed) {
            est.phase_rotation = estimate_phase_rotation(est.centroids);
            est.channel_estimate = estimate_channel(est.centroids, est.phase_rotation);
        }
        if (collapsed || std::abs(est.channel_estimate) < kChannelFloor) {
            result.erasure = true;
            est.erased = true;
            est.symbols.assign(static_cast<std::size_t>(n), 0);
            est.residual = residual;
            result.stages.push_back(std::move(est));
            continue;
        }

        est.symbols = detect_symbols(residual, est.phase_rotation);
        for (int i = 0; i < n; ++i)
            residual[static_cast<std::size_t>(i)] -=
                est.channel_estimate * Qpsk::point(est.symbols[static_cast<std::size_t>(i)]);
        est.residual = residual;
        result.stages.push_back(std::move(est));
    }

    result.detection_order.resize(static_cast<std::size_t>(users));
    std::iota(result.detection_order.begin(), result.detection_order.end(), 0);
    std::stable_sort(result.detection_order.begin(), result.detection_order.end(),
                     [&](int a, int b) {
                         return std::norm(result.stages[static_cast<std::size_t>(a)].channel_estimate) >
                                std::norm(result.stages[static_cast<std::size_t>(b)].channel_estimate);
                     });

    result.detected = SymbolMatrix(users, n);
    for (int r = 0; r < users; ++r) {
        const auto& symbols = result.row_estimate(r).symbols;
        std::copy(symbols.begin(), symbols.end(), result.detected.row(r).begin());
    }
    return result;
}

SymbolMatrix ml_detect_full_csi(const ReceivedBlock& received,
                                std::span<const ChannelRealization> channels) {
    const auto users = static_cast<int>(channels.size());
    if (users < 1) throw InvalidParameter("ml_detect_full_csi: no channels");
    long hypotheses = 1;
    for (int u = 0; u < users; ++u) {
        hypotheses *= Qpsk::kOrder;
        if (hypotheses > kMaxHypotheses)
            throw CapacityExceeded("ml_detect_full_csi: M^K exceeds " +
                                   std::to_string(kMaxHypotheses));
    }

    // Code c enumerates tuples lexicographically: user 0 is the most significant digit.
    std::vector<Complex> candidates(static_cast<std::size_t>(hypotheses));
    for (long c = 0; c < hypotheses; ++c) {
        Complex sum{};
        long rest = c;
        for (int u = users - 1; u >= 0; --u) {
            sum += channels[static_cast<std::size_t>(u)].h *
                   Qpsk::point(static_cast<int>(rest % Qpsk::kOrder));
            rest /= Qpsk::kOrder;
        }
        candidates[static_cast<std::size_t>(c)] = sum;
    }

    const auto n = static_cast<int>(received.samples.size());
    SymbolMatrix out(users, n);
    for (int i = 0; i < n; ++i) {
        const IqSample y = received.samples[static_cast<std::size_t>(i)];
        long best = 0;
        double best_distance = std::numeric_limits<double>::infinity();
        for (long c = 0; c < hypotheses; ++c) {
            const double d = std::norm(y - candidates[static_cast<std::size_t>(c)]);
            if (d < best_distance) {
                best_distance = d;
                best = c;
            }
        }
        for (int u = users - 1; u >= 0; --u) {
            out.at(u, i) = static_cast<int>(best % Qpsk::kOrder);
            best /= Qpsk::kOrder;
        }
    }
    return out;
}

AlignmentReport align_labels(const SymbolMatrix& detected, const Frame& truth,
                             std::span<const ChannelRealization> channels,
                             const SicResult& estimates, AlignmentMode mode) {
    const int users = detected.users();
    if (truth.users() != users || static_cast<int>(channels.size()) != users ||
        static_cast<int>(estimates.detection_order.size()) != users ||
        truth.length() != detected.length())
        throw InvalidParameter("align_labels: inconsistent dimensions");

    std::vector<Complex> estimated(static_cast<std::size_t>(users));
    for (int r = 0; r < users; ++r)
        estimated[static_cast<std::size_t>(r)] = estimates.row_estimate(r).channel_estimate;

    const auto power = [&](int u) { return std::norm(channels[static_cast<std::size_t>(u)].h); };
    const auto best_turn = [&](int row, int user, double* mismatch) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 4; ++k) {
            const double d = std::norm(estimated[static_cast<std::size_t>(row)] * quarter_turn(k) -
                                       channels[static_cast<std::size_t>(user)].h);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (mismatch) *mismatch = best_d;
        return best;
    };

    AlignmentReport report;
    report.user_of_row.resize(static_cast<std::size_t>(users));
    std::iota(report.user_of_row.begin(), report.user_of_row.end(), 0);
    std::stable_sort(report.user_of_row.begin(), report.user_of_row.end(),
                     [&](int a, int b) { return power(a) > power(b); });

    bool tie = false;
    for (int a = 0; a < users && !tie; ++a)
        for (int b = a + 1; b < users && !tie; ++b) {
            const double pa = power(a);
            const double pb = power(b);
            if (pa > 0.0 && pb > 0.0 && std::abs(linear_to_db(pa / pb)) <= 0.1) tie = true;
            if (pa == 0.0 && pb == 0.0) tie = true;
        }

    if (tie && users <= 8) {
        report.permutation_searched = true;
        std::vector<int> perm(static_cast<std::size_t>(users));
        std::iota(perm.begin(), perm.end(), 0);
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (int r = 0; r < users; ++r) {
                double d = 0.0;
                best_turn(r, perm[static_cast<std::size_t>(r)], &d);
                cost += d;
            }
            if (cost < best_cost) {
                best_cost = cost;
                report.user_of_row = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    report.aligned = SymbolMatrix(users, detected.length());
    report.quarter_turns.assign(static_cast<std::size_t>(users), 0);
    for (int r = 0; r < users; ++r) {
        const int user = report.user_of_row[static_cast<std::size_t>(r)];
        const int k = mode == AlignmentMode::Genie ? best_turn(r, user, nullptr) : 0;
        report.quarter_turns[static_cast<std::size_t>(user)] = k;
        const auto src = detected.row(r);
        auto dst = report.aligned.row(user);
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = Qpsk::rotate(src[i], -k);
    }
    return report;
}

}  // namespace noma
