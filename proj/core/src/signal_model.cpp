#include "noma/signal_model.hpp"

#include <cmath>
#include <string>

#include "noma/errors.hpp"

namespace noma {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

const std::array<Complex, 4>& Qpsk::points() {
    static const std::array<Complex, 4> table{
        Complex{kInvSqrt2, kInvSqrt2},
        Complex{-kInvSqrt2, kInvSqrt2},
        Complex{-kInvSqrt2, -kInvSqrt2},
        Complex{kInvSqrt2, -kInvSqrt2},
    };
    return table;
}

Complex Qpsk::point(int index) {
    if (index < 0 || index >= kOrder) throw InvalidParameter("QPSK index out of range");
    return points()[static_cast<std::size_t>(index)];
}

int Qpsk::slice(Complex z) noexcept {
    const double re = z.real();
    const double im = z.imag();
    if (im >= 0.0) return re >= 0.0 ? 0 : 1;
    return re > 0.0 ? 3 : 2;
}

SymbolMatrix::SymbolMatrix(int users, int length, int fill)
    : users_(users),
      length_(length),
      data_(static_cast<std::size_t>(users < 0 ? 0 : users) *
                static_cast<std::size_t>(length < 0 ? 0 : length),
            fill) {
    if (users < 0 || length < 0) throw InvalidParameter("SymbolMatrix: negative dimension");
}

std::span<int> SymbolMatrix::row(int user) {
    return {data_.data() + index(user, 0), static_cast<std::size_t>(length_)};
}

std::span<const int> SymbolMatrix::row(int user) const {
    return {data_.data() + index(user, 0), static_cast<std::size_t>(length_)};
}

ChannelRealization sample_channel(double beta, RandomStream& rng, int user) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw InvalidParameter("sample_channel: beta must be a finite non-negative value");
    ChannelRealization c;
    c.beta = beta;
    c.user = user;
    if (beta == 0.0) return c;
    const double sd = std::sqrt(beta / 2.0);
    const double re = rng.normal();
    const double im = rng.normal();
    c.h = {sd * re, sd * im};
    return c;
}

Frame generate_frame(int users, int length, RandomStream& rng) {
    if (users < 1 || length < 1)
        throw InvalidParameter("generate_frame: K and N must be at least 1");
    Frame frame(users, length);
    for (int u = 0; u < users; ++u)
        for (int i = 0; i < length; ++i) frame.at(u, i) = rng.uniform_index(Qpsk::kOrder);
    return frame;
}

std::vector<IqSample> superimpose(const Frame& frame,
                                  std::span<const ChannelRealization> channels) {
    if (channels.size() != static_cast<std::size_t>(frame.users()))
        throw InvalidParameter("channel count " + std::to_string(channels.size()) +
                               " does not match user count " + std::to_string(frame.users()));
    std::vector<IqSample> y(static_cast<std::size_t>(frame.length()));
    for (int u = 0; u < frame.users(); ++u) {
        const Complex h = channels[static_cast<std::size_t>(u)].h;
        const auto row = frame.row(u);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += h * Qpsk::point(row[i]);
    }
    return y;
}

ReceivedBlock transmit(const Frame& frame, std::span<const ChannelRealization> channels,
                       double noise_power, RandomStream& rng) {
    if (!(noise_power >= 0.0)) throw InvalidParameter("transmit: noise power must be >= 0");
    ReceivedBlock block{superimpose(frame, channels), noise_power};
    if (noise_power > 0.0) {
        const double sd = std::sqrt(noise_power / 2.0);
        for (auto& y : block.samples) {
            const double re = rng.normal();
            const double im = rng.normal();
            y += Complex{sd * re, sd * im};
        }
    }
    return block;
}

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) noexcept { return 10.0 * std::log10(linear); }

Snr snr_of(double beta, double noise_power) {
    if (!(noise_power > 0.0)) throw InvalidParameter("snr_of: noise power must be positive");
    const double linear = beta / noise_power;
    return {linear, linear_to_db(linear)};
}

double mixture_pdf(IqSample y, std::span<const ChannelRealization> channels,
                   double noise_power) {
    if (!(noise_power > 0.0)) throw InvalidParameter("mixture_pdf: noise power must be positive");
    const std::size_t users = channels.size();
    if (users > 8) throw CapacityExceeded("mixture_pdf: at most 8 users");

    std::size_t hypotheses = 1;
    for (std::size_t u = 0; u < users; ++u) hypotheses *= Qpsk::kOrder;

    double sum = 0.0;
    for (std::size_t code = 0; code < hypotheses; ++code) {
        Complex mean{};
        std::size_t rest = code;
        for (std::size_t u = 0; u < users; ++u) {
            mean += channels[u].h * Qpsk::point(static_cast<int>(rest % Qpsk::kOrder));
            rest /= Qpsk::kOrder;
        }
        sum += std::exp(-std::norm(y - mean) / noise_power);
    }
    return sum / (static_cast<double>(hypotheses) * kPi * noise_power);
}

}  // namespace noma
