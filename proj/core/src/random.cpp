#include "noma/random.hpp"

#include "noma/errors.hpp"

namespace noma {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : key_(splitmix64(seed)), engine_(key_) {}

RandomStream RandomStream::substream(std::uint64_t tag) const {
    RandomStream child(0);
    child.key_ = splitmix64(key_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
    child.engine_.seed(child.key_);
    return child;
}

double RandomStream::normal() { return normal_(engine_); }

int RandomStream::uniform_index(int n) {
    if (n < 1) throw InvalidParameter("uniform_index: n must be positive");
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
}

double RandomStream::uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

}  // namespace noma
