#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cellmig/grid.hpp"

namespace cellmig {

/// Pairwise interaction parameters shared by the microscopic model and the
/// nonlocal macroscopic integral terms.
struct KernelParams {
    double beta = 2000.0;      // alignment strength
    double varsigma = 1.0;     // Cucker-Smale exponent
    double w_rep = 500.0;      // repulsion strength between cells
    double w_adh = 4.0;        // adhesion strength between cells
    double r_rep = 0.04;       // repulsion radius
    double r_adh = 0.06;       // adhesion radius (> r_rep)
    double w_rep_tum = 0.0;    // repulsion strength against tumor cells
    double r_rep_tum = 0.07;   // tumor repulsion radius
    double r_align = 0.06;     // optional alignment cutoff radius
    bool align_cutoff = false; // communication rate has no cutoff by default

    void validate() const;
};

/// Cucker-Smale communication rate beta / (1 + r^2)^varsigma.
double gamma_d(double r, const KernelParams& p);

/// Alignment force gamma_D(||dx||) * dv with dv = v_j - v_i, dx = x_i - x_j.
Vec2 gamma1(Vec2 dv, Vec2 dx, const KernelParams& p);

/// Attraction-repulsion force, dx = x_i - x_j. 1/r repulsion up to r_rep,
/// linear elastic adhesion up to r_adh, zero beyond; zero at r = 0.
Vec2 gamma2(Vec2 dx, const KernelParams& p);

/// Radial tumor repulsion, dx = x_i - y_j; zero beyond r_rep_tum and at r = 0.
Vec2 gamma3(Vec2 dx, const KernelParams& p);

/// Discrete convolution with a compactly supported vector kernel, sampled on
/// grid offsets and applied with uniform dx*dy quadrature; source values
/// outside the domain are treated as zero.
class StencilConvolver {
public:
    StencilConvolver() = default;
    template <typename K>
    StencilConvolver(const Grid2D& g, double support_radius, K kernel) {
        build(g, support_radius, [&](double x, double y) { return kernel(x, y); });
    }

    void convolve(const ScalarField& in, VectorField& out) const;
    bool empty() const { return offsets_.empty(); }

private:
    void build(const Grid2D& g, double support_radius, const std::function<Vec2(double, double)>& kernel);

    struct Offset {
        int di, dj;
        double kx, ky;  // kernel value times dx*dy
    };
    Grid2D grid_;
    std::vector<Offset> offsets_;
};

/// FFT convolution with a full-domain scalar kernel (zero padding outside
/// the domain). One instance owns its FFTW plans and scratch buffers and is
/// not safe to share across threads.
class SpectralConvolver {
public:
    template <typename K>
    SpectralConvolver(const Grid2D& g, K kernel) {
        build(g, [&](double x, double y) { return kernel(x, y); });
    }
    ~SpectralConvolver();
    SpectralConvolver(const SpectralConvolver&) = delete;
    SpectralConvolver& operator=(const SpectralConvolver&) = delete;

    void convolve(const ScalarField& in, ScalarField& out);

private:
    void build(const Grid2D& g, const std::function<double(double, double)>& kernel);

    Grid2D grid_;
    int px_ = 0, py_ = 0;  // padded sizes
    struct Fft;
    std::unique_ptr<Fft> fft_;
};

/// Nonlocal integral operators I1, I2, I3 bound to one grid and parameter
/// set. Kernel tables and FFT plans are prepared once at construction.
class NonlocalOperators {
public:
    NonlocalOperators(const Grid2D& g, const KernelParams& p);

    /// I1(x) = sum_y gamma_D(||x-y||) (u(y) - u(x)) rho(y) dx dy, evaluated
    /// through the split conv(gamma_D, rho u) - u * conv(gamma_D, rho).
    VectorField alignment(const ScalarField& rho, const VectorField& u);

    /// The two convolutions behind the split, taken against the momentum
    /// field directly (rho I1 = conv(gamma_D, m) rho - m conv(gamma_D, rho)).
    void alignment_convolutions(const ScalarField& rho, const ScalarField& m1, const ScalarField& m2,
                                ScalarField& conv_rho, VectorField& conv_momentum);

    /// I2(x) = sum_y gamma2(x - y) rho(y) dx dy.
    VectorField attraction_repulsion(const ScalarField& rho) const;

    /// I3(x) = sum_y gamma3(x - y) zeta(y) dx dy.
    VectorField tumor(const ScalarField& zeta) const;

private:
    Grid2D grid_;
    KernelParams params_;
    std::unique_ptr<SpectralConvolver> align_conv_;
    StencilConvolver attr_rep_conv_;
    StencilConvolver tumor_conv_;
};

/// One-shot wrappers around NonlocalOperators.
VectorField nonlocal_alignment(const ScalarField& rho, const VectorField& u, const KernelParams& p);
VectorField nonlocal_attr_rep(const ScalarField& rho, const KernelParams& p);
VectorField nonlocal_tumor(const ScalarField& zeta, const KernelParams& p);

}  // namespace cellmig
