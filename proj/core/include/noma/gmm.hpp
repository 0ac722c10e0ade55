#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "noma/signal_model.hpp"

namespace noma::gmm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct GaussianComponent {
    Vec2 mean = Vec2::Zero();
    Mat2 covariance = Mat2::Identity();
    double weight = 0.0;
};

/// Which log-likelihood drives the convergence test.
enum class LikelihoodKind {
    Hard,  ///< sum_i ln(w_{m_i} g_{m_i}(z_i)), m_i the argmax assignment
    Soft,  ///< sum_i ln(sum_j w_j g_j(z_i))
};

enum class CovarianceModel {
    Full,             ///< independent full covariance per component
    SphericalShared,  ///< one sigma^2 I shared by every component (K-means-like)
};

struct EmConfig {
    /// Stop once an iteration improves the likelihood by less than this.
    /// Unset means 1e-6 * N.
    std::optional<double> epsilon;
    int max_iterations = 200;
    bool weights_fixed = true;
    /// Relative ridge: each covariance gets floor * trace(global covariance) / 2 added.
    double covariance_floor = 1e-6;
    LikelihoodKind likelihood = LikelihoodKind::Hard;
    CovarianceModel covariance_model = CovarianceModel::Full;

    /// Throws InvalidParameter when a field is out of range.
    void validate() const;

    double epsilon_for(std::size_t samples) const {
        return epsilon ? *epsilon : 1e-6 * static_cast<double>(samples);
    }
};

/// Row-major N x M responsibility matrix.
using Responsibilities = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GmmState {
    std::vector<GaussianComponent> components;
    Responsibilities responsibilities;
    std::vector<int> assignments;
    double log_likelihood = 0.0;

    int size() const noexcept { return static_cast<int>(components.size()); }
};

struct GmmFit {
    GmmState state;
    int iterations = 0;
    bool converged = false;
    bool fallback_init = false;
    /// Components left untouched by at least one M-step because no sample backed them.
    bool starved_component = false;
    /// Likelihood after initialization, then after each accepted iteration.
    std::vector<double> likelihood_trace;
    /// Likelihood of a final proposal that scored below its predecessor. Such a
    /// step ends the loop and the previous parameters are returned instead.
    std::optional<double> discarded_likelihood;
};

inline Vec2 to_vec(IqSample z) { return {z.real(), z.imag()}; }
inline IqSample to_complex(const Vec2& v) { return {v.x(), v.y()}; }

/// Bivariate normal density. Throws DegenerateCovariance when `covariance`
/// is not positive definite.
double gaussian_pdf(const Vec2& z, const Vec2& mean, const Mat2& covariance);
double gaussian_log_pdf(const Vec2& z, const Vec2& mean, const Mat2& covariance);

/// Ridge added to every covariance for this data set.
double regularization(std::span<const IqSample> samples, const EmConfig& config);

struct QuadrantInit {
    GmmState state;
    bool fallback = false;
};

/// Four components seeded from the samples falling in each quadrant (index
/// order of `Qpsk`), weights 1/4. When a quadrant is empty, means go to
/// r (+-1 +-j)/sqrt(2) with r the mean sample magnitude and covariances to a
/// quarter of the global covariance, and `fallback` is set.
QuadrantInit init_by_quadrants(std::span<const IqSample> samples,
                               const EmConfig& config = {});

/// Fills responsibilities and argmax assignments (ties toward the lower index).
/// Evaluated in the log domain so far-away samples never underflow.
void e_step(GmmState& state, std::span<const IqSample> samples);

/// Hard log-likelihood; -inf when an assigned component has zero weight.
double log_likelihood(const GmmState& state, std::span<const IqSample> samples);

/// sum_i ln sum_j w_j g_j(z_i).
double soft_log_likelihood(const GmmState& state, std::span<const IqSample> samples);

double likelihood(const GmmState& state, std::span<const IqSample> samples, LikelihoodKind kind);

struct MStepReport {
    /// Components whose total responsibility fell below 1e-12; they keep their
    /// previous parameters.
    std::vector<int> starved;
};

/// Weighted-moment updates from `state.responsibilities`.
MStepReport m_step(GmmState& state, std::span<const IqSample> samples, const EmConfig& config);

/// Quadrant initialization followed by EM iterations, which continue while an
/// iteration raises the configured likelihood by at least epsilon. The best
/// parameters seen are returned. Throws InsufficientData when there are fewer
/// samples than components.
GmmFit fit(std::span<const IqSample> samples, const EmConfig& config = {});

/// EM iterations starting from the supplied components.
GmmFit fit_from(std::vector<GaussianComponent> initial, std::span<const IqSample> samples,
                const EmConfig& config = {});

}  // namespace noma::gmm
