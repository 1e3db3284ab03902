#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace cbfpred::detail {

struct AscentBox {
    std::vector<double> lo, hi;
};

/// Deterministic projected coordinate ascent: sweeps the coordinates in index
/// order, hill-climbing each one inside its box with step halving/doubling.
/// Maximizes obj(theta); returns the achieved value. Every accepted move
/// strictly improves the objective, so the result never regresses below the
/// start value.
template <class F>
double coordinate_ascent(std::vector<double>& theta, const AscentBox& box, F&& obj,
                         int max_sweeps, double tol) {
    double f0 = obj(theta.data());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double f_start = f0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double lo = box.lo[j], hi = box.hi[j];
            if (!(hi > lo)) continue;
            double step = (hi - lo) / (8.0 * static_cast<double>(1 << std::min(sweep, 3)));
            for (int halving = 0; halving <= 2; ++halving) {
                const double c = theta[j];
                double best_f = f0, best_v = c;
                for (const double cand :
                     {std::clamp(c + step, lo, hi), std::clamp(c - step, lo, hi)}) {
                    if (cand == c) continue;
                    theta[j] = cand;
                    const double f = obj(theta.data());
                    if (f > best_f) {
                        best_f = f;
                        best_v = cand;
                    }
                }
                theta[j] = best_v;
                if (best_v == c) {
                    step *= 0.5;
                    continue;
                }
                f0 = best_f;
                // March onward in the accepted direction with doubling steps.
                double dir = best_v - c;
                for (int m = 0; m < 3; ++m) {
                    dir *= 2.0;
                    const double cand = std::clamp(theta[j] + dir, lo, hi);
                    if (cand == theta[j]) break;
                    const double keep = theta[j];
                    theta[j] = cand;
                    const double f = obj(theta.data());
                    if (f > f0) {
                        f0 = f;
                    } else {
                        theta[j] = keep;
                        break;
                    }
                }
                break;
            }
        }
        if (f0 - f_start < tol) break;
    }
    return f0;
}

}  // namespace cbfpred::detail
