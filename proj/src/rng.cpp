#include "rexp/rng.hpp"

#include <cmath>

#include "rexp/error.hpp"

namespace rexp {

double SeededRng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

std::vector<double> gaussian(SeededRng& rng, std::size_t n, double mean, double std) {
    if (!(std >= 0.0) || !std::isfinite(std)) {
        throw ContractError("gaussian: standard deviation must be finite and >= 0");
    }
    std::vector<double> out(n, mean);
    if (std == 0.0) return out;
    for (auto& x : out) x = mean + std * rng.normal();
    return out;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t round, std::uint64_t slot) noexcept {
    return mix64(mix64(mix64(master) ^ round) ^ (slot * 0xd1b54a32d192ed03ULL));
}

}  // namespace rexp
