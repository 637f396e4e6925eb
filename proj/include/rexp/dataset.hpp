#pragma once

#include <cstdint>
#include <string>

#include "rexp/linalg.hpp"

namespace rexp {

// Where a dataset came from: either a generator and its parameters, or a file.
struct Provenance {
    std::string generator;  // "sinusoid", "file", or "" for in-memory data
    std::size_t n = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::string path;
};

struct Dataset {
    Matrix x;  // n x d
    Matrix y;  // n x 1
    Provenance provenance;

    std::size_t size() const noexcept { return x.rows(); }
    // Throws ShapeError unless x.rows() == y.rows() >= 1.
    void validate() const;
};

}  // namespace rexp
