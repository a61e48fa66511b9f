// Independent reference implementations used to check the fast paths. These
// stay deliberately naive (direct double sums, closed forms) and must not
// share code with the library implementations they verify.
#pragma once

#include <cmath>
#include <vector>

#include "cellmig/grid.hpp"
#include "cellmig/kernels.hpp"
#include "cellmig/models.hpp"

namespace oracles {

using namespace cellmig;

// I1 by the direct O(n^2) double sum over all node pairs.
inline VectorField alignment_double_sum(const ScalarField& rho, const VectorField& u,
                                        const KernelParams& p) {
    const Grid2D& g = rho.grid;
    VectorField out(g);
    const double w = g.dx * g.dy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s1 = 0.0, s2 = 0.0;
            std::size_t k = static_cast<std::size_t>(g.idx(i, j));
            for (int jj = 0; jj < g.ny; ++jj)
                for (int ii = 0; ii < g.nx; ++ii) {
                    std::size_t kk = static_cast<std::size_t>(g.idx(ii, jj));
                    double dx = g.x(i) - g.x(ii), dy = g.y(j) - g.y(jj);
                    double gd = p.beta / std::pow(1.0 + dx * dx + dy * dy, p.varsigma);
                    s1 += gd * (u.comp1[kk] - u.comp1[k]) * rho.values[kk];
                    s2 += gd * (u.comp2[kk] - u.comp2[k]) * rho.values[kk];
                }
            out.comp1[k] = s1 * w;
            out.comp2[k] = s2 * w;
        }
    return out;
}

// I2 / I3 by the direct double sum with an arbitrary pointwise kernel.
template <typename Kernel>
inline VectorField kernel_double_sum(const ScalarField& density, Kernel kernel) {
    const Grid2D& g = density.grid;
    VectorField out(g);
    const double w = g.dx * g.dy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (int jj = 0; jj < g.ny; ++jj)
                for (int ii = 0; ii < g.nx; ++ii) {
                    Vec2 k = kernel(Vec2{g.x(i) - g.x(ii), g.y(j) - g.y(jj)});
                    double r = density(ii, jj);
                    s1 += k.x * r;
                    s2 += k.y * r;
                }
            std::size_t k = static_cast<std::size_t>(g.idx(i, j));
            out.comp1[k] = s1 * w;
            out.comp2[k] = s2 * w;
        }
    return out;
}

// Closed-form Gaussian mixture: sum_i N(x_i, (h sigma)^2 I) / m.
inline ScalarField gaussian_mixture(const std::vector<Vec2>& samples, double hs, const Grid2D& g) {
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double sum = 0.0;
            for (const Vec2& s : samples) {
                double dx = g.x(i) - s.x, dy = g.y(j) - s.y;
                sum += std::exp(-(dx * dx + dy * dy) / (2.0 * hs * hs)) / (2.0 * M_PI * hs * hs);
            }
            out(i, j) = sum / static_cast<double>(samples.size());
        }
    return out;
}

inline ScalarField random_field(const Grid2D& g, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    ScalarField f(g);
    for (double& v : f.values) v = rng.uniform(lo, hi);
    return f;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace oracles
