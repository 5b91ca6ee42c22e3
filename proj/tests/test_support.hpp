#pragma once

// Small generators shared by the property tests.

#include "glr/core.hpp"
#include "glr/rng.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace glr::test {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = scale * rng.normal();
    }
    return v;
}

inline Logits random_logits(Rng& rng, std::size_t n, double scale = 3.0) {
    return Logits(random_vector(rng, n, scale));
}

/// Strictly positive weights normalized to 1.
inline std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) {
        x = 0.05 + rng.uniform();
        total += x;
    }
    for (double& x : w) {
        x /= total;
    }
    return w;
}

inline ProbDist random_dist(Rng& rng, std::size_t n) { return ProbDist(random_simplex(rng, n)); }

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("glr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace glr::test
