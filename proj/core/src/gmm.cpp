#include "noma/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "noma/errors.hpp"

namespace noma::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kStarvedMass = 1e-12;

bool positive_definite(const Mat2& c) {
    return std::isfinite(c(0, 0)) && std::isfinite(c(1, 1)) && std::isfinite(c(0, 1)) &&
           c(0, 0) > 0.0 && c.determinant() > 0.0;
}

/// Per-component terms reused across every sample of an E-step.
struct Evaluator {
    Vec2 mean;
    Mat2 inverse;
    double log_scale;  // ln w - ln 2pi - ln|S|/2

    Evaluator(const GaussianComponent& c) : mean(c.mean) {
        if (!positive_definite(c.covariance))
            throw DegenerateCovariance("mixture component covariance is not positive definite");
        inverse = c.covariance.inverse();
        const double log_weight =
            c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
        log_scale = log_weight - kLog2Pi - 0.5 * std::log(c.covariance.determinant());
    }

    double operator()(const Vec2& z) const {
        const Vec2 d = z - mean;
        return log_scale - 0.5 * d.dot(inverse * d);
    }
};

std::vector<Evaluator> evaluators(const GmmState& state) {
    return {state.components.begin(), state.components.end()};
}

Mat2 global_covariance(std::span<const IqSample> samples) {
    Vec2 mean = Vec2::Zero();
    for (auto z : samples) mean += to_vec(z);
    mean /= static_cast<double>(samples.size());
    Mat2 cov = Mat2::Zero();
    for (auto z : samples) {
        const Vec2 d = to_vec(z) - mean;
        cov += d * d.transpose();
    }
    return cov / static_cast<double>(samples.size());
}

GmmFit iterate(GmmState state, std::span<const IqSample> samples, const EmConfig& config) {
    GmmFit result;
    const double epsilon = config.epsilon_for(samples.size());

    e_step(state, samples);
    double previous = likelihood(state, samples, config.likelihood);
    state.log_likelihood = previous;
    result.likelihood_trace.push_back(previous);

    for (int t = 1; t <= config.max_iterations; ++t) {
        GmmState candidate = state;
        const bool starved = !m_step(candidate, samples, config).starved.empty();
        e_step(candidate, samples);
        const double current = likelihood(candidate, samples, config.likelihood);
        result.iterations = t;
        if (current < previous) {
            // Keep the better parameters; the proposal is reported, not returned.
            result.discarded_likelihood = current;
            result.converged = true;
            break;
        }
        candidate.log_likelihood = current;
        state = std::move(candidate);
        result.starved_component = result.starved_component || starved;
        result.likelihood_trace.push_back(current);
        if (current - previous < epsilon) {
            result.converged = true;
            break;
        }
        previous = current;
    }
    result.state = std::move(state);
    return result;
}

}  // namespace

void EmConfig::validate() const {
    if (epsilon && !(*epsilon > 0.0)) throw InvalidParameter("EM epsilon must be positive");
    if (max_iterations < 1) throw InvalidParameter("EM max_iterations must be at least 1");
    if (!(covariance_floor > 0.0)) throw InvalidParameter("EM covariance_floor must be positive");
}

double gaussian_log_pdf(const Vec2& z, const Vec2& mean, const Mat2& covariance) {
    if (!positive_definite(covariance))
        throw DegenerateCovariance("gaussian_pdf: covariance is not positive definite");
    const Vec2 d = z - mean;
    return -kLog2Pi - 0.5 * std::log(covariance.determinant()) -
           0.5 * d.dot(covariance.inverse() * d);
}

double gaussian_pdf(const Vec2& z, const Vec2& mean, const Mat2& covariance) {
    return std::exp(gaussian_log_pdf(z, mean, covariance));
}

double regularization(std::span<const IqSample> samples, const EmConfig& config) {
    if (samples.empty()) return config.covariance_floor;
    const double half_trace = global_covariance(samples).trace() / 2.0;
    return half_trace > 0.0 ? config.covariance_floor * half_trace : config.covariance_floor;
}

QuadrantInit init_by_quadrants(std::span<const IqSample> samples, const EmConfig& config) {
    if (samples.empty()) throw InsufficientData("init_by_quadrants: no samples");
    constexpr int kQuadrants = 4;
    const double ridge = regularization(samples, config);

    std::array<Vec2, kQuadrants> sum;
    std::array<Mat2, kQuadrants> outer;
    std::array<std::size_t, kQuadrants> count{};
    sum.fill(Vec2::Zero());
    outer.fill(Mat2::Zero());
    for (auto z : samples) {
        const auto q = static_cast<std::size_t>(Qpsk::slice(z));
        ++count[q];
        sum[q] += to_vec(z);
    }

    QuadrantInit init;
    init.state.components.resize(kQuadrants);
    init.fallback = std::any_of(count.begin(), count.end(), [](auto n) { return n == 0; });

    if (init.fallback) {
        double radius = 0.0;
        for (auto z : samples) radius += std::abs(z);
        radius /= static_cast<double>(samples.size());
        Mat2 cov = global_covariance(samples) / 4.0 + ridge * Mat2::Identity();
        if (config.covariance_model == CovarianceModel::SphericalShared)
            cov = (cov.trace() / 2.0) * Mat2::Identity();
        for (int j = 0; j < kQuadrants; ++j) {
            auto& c = init.state.components[static_cast<std::size_t>(j)];
            c.mean = to_vec(radius * Qpsk::point(j));
            c.covariance = cov;
            c.weight = 1.0 / kQuadrants;
        }
        return init;
    }

    for (std::size_t q = 0; q < kQuadrants; ++q) sum[q] /= static_cast<double>(count[q]);
    for (auto z : samples) {
        const auto q = static_cast<std::size_t>(Qpsk::slice(z));
        const Vec2 d = to_vec(z) - sum[q];
        outer[q] += d * d.transpose();
    }
    double pooled = 0.0;
    for (const auto& o : outer) pooled += o.trace();
    pooled = pooled / (2.0 * static_cast<double>(samples.size())) + ridge;
    for (std::size_t q = 0; q < kQuadrants; ++q) {
        auto& c = init.state.components[q];
        c.mean = sum[q];
        c.covariance = config.covariance_model == CovarianceModel::SphericalShared
                           ? Mat2(pooled * Mat2::Identity())
                           : Mat2(outer[q] / static_cast<double>(count[q]) + ridge * Mat2::Identity());
        c.weight = 1.0 / kQuadrants;
    }
    return init;
}

void e_step(GmmState& state, std::span<const IqSample> samples) {
    const auto eval = evaluators(state);
    const int m = state.size();
    const auto n = static_cast<Eigen::Index>(samples.size());
    state.responsibilities.resize(n, m);
    state.assignments.assign(samples.size(), 0);

    std::vector<double> log_p(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec2 z = to_vec(samples[static_cast<std::size_t>(i)]);
        int best = 0;
        for (int j = 0; j < m; ++j) {
            log_p[static_cast<std::size_t>(j)] = eval[static_cast<std::size_t>(j)](z);
            if (log_p[static_cast<std::size_t>(j)] > log_p[static_cast<std::size_t>(best)]) best = j;
        }
        const double top = log_p[static_cast<std::size_t>(best)];
        double total = 0.0;
        for (int j = 0; j < m; ++j) {
            const double w = std::exp(log_p[static_cast<std::size_t>(j)] - top);
            state.responsibilities(i, j) = w;
            total += w;
        }
        state.responsibilities.row(i) /= total;
        state.assignments[static_cast<std::size_t>(i)] = best;
    }
}

double log_likelihood(const GmmState& state, std::span<const IqSample> samples) {
    if (state.assignments.size() != samples.size())
        throw InvalidParameter("log_likelihood: assignments not populated for these samples");
    const auto eval = evaluators(state);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        total += eval[static_cast<std::size_t>(state.assignments[i])](to_vec(samples[i]));
    return total;
}

double soft_log_likelihood(const GmmState& state, std::span<const IqSample> samples) {
    const auto eval = evaluators(state);
    std::vector<double> log_p(eval.size());
    double total = 0.0;
    for (auto s : samples) {
        const Vec2 z = to_vec(s);
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < eval.size(); ++j) {
            log_p[j] = eval[j](z);
            top = std::max(top, log_p[j]);
        }
        double sum = 0.0;
        for (double lp : log_p) sum += std::exp(lp - top);
        total += top + std::log(sum);
    }
    return total;
}

double likelihood(const GmmState& state, std::span<const IqSample> samples, LikelihoodKind kind) {
    return kind == LikelihoodKind::Hard ? log_likelihood(state, samples)
                                        : soft_log_likelihood(state, samples);
}

MStepReport m_step(GmmState& state, std::span<const IqSample> samples, const EmConfig& config) {
    const int m = state.size();
    const auto& r = state.responsibilities;
    if (r.rows() != static_cast<Eigen::Index>(samples.size()) || r.cols() != m)
        throw InvalidParameter("m_step: responsibilities do not match samples and components");

    const double ridge = regularization(samples, config);
    MStepReport report;

    const Eigen::VectorXd mass = r.colwise().sum().transpose();
    const double total_mass = mass.sum();

    std::vector<Mat2> scatter(static_cast<std::size_t>(m), Mat2::Zero());
    for (int j = 0; j < m; ++j) {
        if (mass(j) < kStarvedMass) {
            report.starved.push_back(j);
            continue;
        }
        Vec2 mean = Vec2::Zero();
        for (std::size_t i = 0; i < samples.size(); ++i)
            mean += r(static_cast<Eigen::Index>(i), j) * to_vec(samples[i]);
        mean /= mass(j);
        Mat2 s = Mat2::Zero();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Vec2 d = to_vec(samples[i]) - mean;
            s += r(static_cast<Eigen::Index>(i), j) * (d * d.transpose());
        }
        state.components[static_cast<std::size_t>(j)].mean = mean;
        scatter[static_cast<std::size_t>(j)] = s;
    }

    const auto starved = [&](int j) {
        return std::find(report.starved.begin(), report.starved.end(), j) != report.starved.end();
    };

    if (config.covariance_model == CovarianceModel::Full) {
        for (int j = 0; j < m; ++j) {
            if (starved(j)) continue;
            state.components[static_cast<std::size_t>(j)].covariance =
                scatter[static_cast<std::size_t>(j)] / mass(j) + ridge * Mat2::Identity();
        }
    } else {
        double trace = 0.0;
        double backed = 0.0;
        for (int j = 0; j < m; ++j) {
            if (starved(j)) continue;
            trace += scatter[static_cast<std::size_t>(j)].trace();
            backed += mass(j);
        }
        if (backed > 0.0) {
            const double variance = trace / (2.0 * backed) + ridge;
            for (int j = 0; j < m; ++j)
                if (!starved(j))
                    state.components[static_cast<std::size_t>(j)].covariance =
                        variance * Mat2::Identity();
        }
    }

    if (!config.weights_fixed && total_mass > 0.0) {
        for (int j = 0; j < m; ++j)
            if (!starved(j)) state.components[static_cast<std::size_t>(j)].weight = mass(j) / total_mass;
        // Renormalize so starved components keep their share and the sum stays 1.
        double sum = 0.0;
        for (const auto& c : state.components) sum += c.weight;
        for (auto& c : state.components) c.weight /= sum;
    }
    return report;
}

GmmFit fit(std::span<const IqSample> samples, const EmConfig& config) {
    config.validate();
    constexpr std::size_t kComponents = 4;
    if (samples.size() < kComponents)
        throw InsufficientData("GMM fit needs at least " + std::to_string(kComponents) +
                               " samples, got " + std::to_string(samples.size()));
    auto init = init_by_quadrants(samples, config);
    auto result = iterate(std::move(init.state), samples, config);
    result.fallback_init = init.fallback;
    return result;
}

GmmFit fit_from(std::vector<GaussianComponent> initial, std::span<const IqSample> samples,
                const EmConfig& config) {
    config.validate();
    if (samples.size() < initial.size())
        throw InsufficientData("GMM fit needs at least as many samples as components");
    GmmState state;
    state.components = std::move(initial);
    return iterate(std::move(state), samples, config);
}

}  // namespace noma::gmm
