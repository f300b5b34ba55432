#pragma once

// Synthetic streams for the regret and kernel checks.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "soauc/data.hpp"
#include "soauc/rng.hpp"

namespace soauc {

/// Two Gaussian classes with means +/- shift along the first axis, positive with
/// probability pos_fraction; points with norm above 1 are projected onto the
/// unit sphere.
inline std::vector<LabeledInstance> gaussian_unit_ball_stream(std::size_t n, std::size_t p, std::uint64_t seed,
                                                              double pos_fraction = 0.3, double shift = 0.3,
                                                              double spread = 0.3) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<LabeledInstance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = coin(rng) < pos_fraction ? 1 : -1;
        Vector x(p);
        for (std::size_t j = 0; j < p; ++j) x[j] = noise(rng);
        if (p > 0) x[0] += y * shift;
        const double nrm = norm(x);
        if (nrm > 1.0) x *= 1.0 / nrm;
        out.push_back({std::move(x), y});
    }
    return out;
}

/// Interleaving half-moons in the plane: negatives on the upper unit arc,
/// positives on the lower arc shifted by (shift_x, shift_y).
inline std::vector<LabeledInstance> two_moons(std::size_t n, std::uint64_t seed, double noise = 0.1,
                                              double pos_fraction = 0.5, double shift_x = 1.0,
                                              double shift_y = 0.5) {
    Rng rng(seed);
    std::normal_distribution<double> jitter(0.0, noise);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<LabeledInstance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = coin(rng) < pos_fraction ? 1 : -1;
        const double a = angle(rng);
        Vector x(2);
        if (y == -1) {
            x[0] = std::cos(a);
            x[1] = std::sin(a);
        } else {
            x[0] = shift_x - std::cos(a);
            x[1] = shift_y - std::sin(a);
        }
        x[0] += jitter(rng);
        x[1] += jitter(rng);
        out.push_back({std::move(x), y});
    }
    return out;
}

inline Dataset to_dataset(std::vector<LabeledInstance> instances) {
    Dataset d;
    d.dim = instances.empty() ? 0 : instances.front().x.size();
    d.instances = std::move(instances);
    return d;
}

}  // namespace soauc
