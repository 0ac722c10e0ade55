#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "noma/random.hpp"

namespace noma {

using Complex = std::complex<double>;

/// A received sample; the real part is the in-phase component, the imaginary
/// part the quadrature component.
using IqSample = Complex;

inline constexpr double kPi = 3.14159265358979323846;

/// Unit-energy QPSK. Indices follow quadrant order:
///   0 -> e^{j pi/4} (++), 1 -> e^{j3pi/4} (-+), 2 -> e^{-j3pi/4} (--), 3 -> e^{-j pi/4} (+-).
/// Multiplying a point by e^{j pi/2} advances its index by one (mod 4).
struct Qpsk {
    static constexpr int kOrder = 4;

    static Complex point(int index);
    static const std::array<Complex, 4>& points();

    /// Canonical phase of `index`, in [pi/4, 7pi/4].
    static double phase(int index) { return kPi / 4.0 + index * kPi / 2.0; }

    /// Quadrant slicer. Samples on a boundary go to the lower index.
    static int slice(Complex z) noexcept;

    /// Index of point(index) * e^{j k pi/2}.
    static int rotate(int index, int quarter_turns) noexcept {
        return ((index + quarter_turns) % 4 + 4) % 4;
    }
};

/// K x N matrix of constellation indices, row per user.
class SymbolMatrix {
public:
    SymbolMatrix() = default;
    SymbolMatrix(int users, int length, int fill = 0);

    int users() const noexcept { return users_; }
    int length() const noexcept { return length_; }

    int& at(int user, int i) { return data_[index(user, i)]; }
    int at(int user, int i) const { return data_[index(user, i)]; }

    std::span<int> row(int user);
    std::span<const int> row(int user) const;

    friend bool operator==(const SymbolMatrix&, const SymbolMatrix&) = default;

private:
    std::size_t index(int user, int i) const {
        return static_cast<std::size_t>(user) * static_cast<std::size_t>(length_) +
               static_cast<std::size_t>(i);
    }

    int users_ = 0;
    int length_ = 0;
    std::vector<int> data_;
};

/// Transmitted symbols for one frame; every user sends `length()` QPSK symbols.
using Frame = SymbolMatrix;

struct ChannelRealization {
    Complex h{};
    double beta = 0.0;  ///< large-scale power; E|h|^2 = beta
    int user = 0;
};

struct ReceivedBlock {
    std::vector<IqSample> samples;
    double noise_power = 0.0;
};

struct Snr {
    double linear;
    double db;
};

/// Draws h ~ CN(0, beta).
ChannelRealization sample_channel(double beta, RandomStream& rng, int user = 0);

/// i.i.d. uniform QPSK indices, K users by N symbols.
Frame generate_frame(int users, int length, RandomStream& rng);

/// Noise-free superposition sum_u h_u x_{u,i}.
std::vector<IqSample> superimpose(const Frame& frame,
                                  std::span<const ChannelRealization> channels);

/// y_i = sum_u h_u x_{u,i} + n_i with n_i ~ CN(0, noise_power).
ReceivedBlock transmit(const Frame& frame, std::span<const ChannelRealization> channels,
                       double noise_power, RandomStream& rng);

Snr snr_of(double beta, double noise_power);

double db_to_linear(double db) noexcept;
double linear_to_db(double linear) noexcept;

/// Density of a received sample under the equiprobable superposition mixture
/// (M^K circular Gaussian components of variance noise_power). Diagnostic only.
double mixture_pdf(IqSample y, std::span<const ChannelRealization> channels,
                   double noise_power);

/// Stream-derivation tags for the per-frame substreams.
enum class StreamPurpose : std::uint64_t { Channel = 1, Symbols = 2, Noise = 3 };

}  // namespace noma
