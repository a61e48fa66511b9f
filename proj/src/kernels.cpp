#include "cellmig/kernels.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace cellmig {

namespace {
// FFTW plan creation/destruction is not thread safe; execution on distinct
// plans is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void KernelParams::validate() const {
    if (beta < 0.0) throw std::invalid_argument("KernelParams: beta >= 0 required");
    if (varsigma <= 0.0) throw std::invalid_argument("KernelParams: varsigma > 0 required");
    if (w_rep < 0.0 || w_adh < 0.0) throw std::invalid_argument("KernelParams: w_rep, w_adh >= 0 required");
    if (!(r_rep > 0.0)) throw std::invalid_argument("KernelParams: r_rep > 0 required");
    if (!(r_adh > r_rep)) throw std::invalid_argument("KernelParams: R_adh > R_rep required");
    if (w_rep_tum < 0.0) throw std::invalid_argument("KernelParams: w_rep_tum >= 0 required");
    if (!(r_rep_tum > 0.0)) throw std::invalid_argument("KernelParams: r_rep_tum > 0 required");
    if (align_cutoff && !(r_align > 0.0)) throw std::invalid_argument("KernelParams: r_align > 0 required");
}

double gamma_d(double r, const KernelParams& p) {
    if (p.align_cutoff && r > p.r_align) return 0.0;
    double base = 1.0 + r * r;
    if (p.varsigma == 1.0) return p.beta / base;
    if (p.varsigma == 2.0) return p.beta / (base * base);
    return p.beta / std::pow(base, p.varsigma);
}

Vec2 gamma1(Vec2 dv, Vec2 dx, const KernelParams& p) {
    double g = gamma_d(dx.norm(), p);
    return {g * dv.x, g * dv.y};
}

Vec2 gamma2(Vec2 dx, const KernelParams& p) {
    double r = dx.norm();
    if (r <= 0.0 || r > p.r_adh) return {0.0, 0.0};
    // unit vector (x_j - x_i)/r = -dx/r
    double s;
    if (r <= p.r_rep) {
        s = -p.w_rep * (1.0 / r - 1.0 / p.r_rep);
    } else {
        s = p.w_adh * (r - p.r_rep);
    }
    return {-s * dx.x / r, -s * dx.y / r};
}

Vec2 gamma3(Vec2 dx, const KernelParams& p) {
    double r = dx.norm();
    if (r <= 0.0 || r > p.r_rep_tum) return {0.0, 0.0};
    double s = -p.w_rep_tum * (1.0 / r - 1.0 / p.r_rep_tum);
    return {-s * dx.x / r, -s * dx.y / r};
}

// ---------------------------------------------------------------------------
// StencilConvolver

void StencilConvolver::build(const Grid2D& g, double support_radius,
                             const std::function<Vec2(double, double)>& kernel) {
    grid_ = g;
    int ri = static_cast<int>(std::ceil(support_radius / g.dx)) + 1;
    int rj = static_cast<int>(std::ceil(support_radius / g.dy)) + 1;
    const double w = g.dx * g.dy;
    for (int dj = -rj; dj <= rj; ++dj) {
        for (int di = -ri; di <= ri; ++di) {
            Vec2 k = kernel(di * g.dx, dj * g.dy);
            if (k.x != 0.0 || k.y != 0.0) offsets_.push_back({di, dj, k.x * w, k.y * w});
        }
    }
}

void StencilConvolver::convolve(const ScalarField& in, VectorField& out) const {
    const Grid2D& g = grid_;
    if (!(in.grid == g)) throw std::invalid_argument("StencilConvolver: grid mismatch");
    out = VectorField(g);
    for (const Offset& o : offsets_) {
        // out(i,j) += k(o) * in(i - o.di, j - o.dj)
        int ilo = std::max(0, o.di), ihi = std::min(g.nx, g.nx + o.di);
        int jlo = std::max(0, o.dj), jhi = std::min(g.ny, g.ny + o.dj);
        for (int j = jlo; j < jhi; ++j) {
            const double* src = &in.values[static_cast<std::size_t>(g.idx(ilo - o.di, j - o.dj))];
            double* d1 = &out.comp1[static_cast<std::size_t>(g.idx(ilo, j))];
            double* d2 = &out.comp2[static_cast<std::size_t>(g.idx(ilo, j))];
            for (int i = 0; i < ihi - ilo; ++i) {
                d1[i] += o.kx * src[i];
                d2[i] += o.ky * src[i];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// SpectralConvolver

struct SpectralConvolver::Fft {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_complex* kspec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    int nspec = 0;

    ~Fft() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
        if (real) fftw_free(real);
        if (spec) fftw_free(spec);
        if (kspec) fftw_free(kspec);
    }
};

SpectralConvolver::~SpectralConvolver() = default;

void SpectralConvolver::build(const Grid2D& g, const std::function<double(double, double)>& kernel) {
    grid_ = g;
    px_ = 2 * g.nx;  // >= 2 nx - 1, so the circular convolution is linear
    py_ = 2 * g.ny;
    fft_ = std::make_unique<Fft>();
    Fft& f = *fft_;
    f.nspec = py_ * (px_ / 2 + 1);
    f.real = fftw_alloc_real(static_cast<std::size_t>(px_) * py_);
    f.spec = fftw_alloc_complex(static_cast<std::size_t>(f.nspec));
    f.kspec = fftw_alloc_complex(static_cast<std::size_t>(f.nspec));
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        f.fwd = fftw_plan_dft_r2c_2d(py_, px_, f.real, f.spec, FFTW_ESTIMATE);
        f.inv = fftw_plan_dft_c2r_2d(py_, px_, f.spec, f.real, FFTW_ESTIMATE);
    }
    if (!f.fwd || !f.inv) throw std::runtime_error("SpectralConvolver: FFTW plan creation failed");

    // Kernel samples in wrap-around order, scaled by the quadrature weight
    // and the inverse transform normalization.
    const double scale = g.dx * g.dy / (static_cast<double>(px_) * py_);
    std::fill(f.real, f.real + static_cast<std::size_t>(px_) * py_, 0.0);
    for (int dj = -(g.ny - 1); dj <= g.ny - 1; ++dj) {
        int jj = (dj + py_) % py_;
        for (int di = -(g.nx - 1); di <= g.nx - 1; ++di) {
            int ii = (di + px_) % px_;
            f.real[static_cast<std::size_t>(jj) * px_ + ii] = kernel(di * g.dx, dj * g.dy) * scale;
        }
    }
    fftw_execute(f.fwd);
    std::memcpy(f.kspec, f.spec, sizeof(fftw_complex) * static_cast<std::size_t>(f.nspec));
}

void SpectralConvolver::convolve(const ScalarField& in, ScalarField& out) {
    const Grid2D& g = grid_;
    if (!(in.grid == g)) throw std::invalid_argument("SpectralConvolver: grid mismatch");
    Fft& f = *fft_;
    std::fill(f.real, f.real + static_cast<std::size_t>(px_) * py_, 0.0);
    for (int j = 0; j < g.ny; ++j)
        std::copy(&in.values[static_cast<std::size_t>(g.idx(0, j))],
                  &in.values[static_cast<std::size_t>(g.idx(0, j))] + g.nx,
                  f.real + static_cast<std::size_t>(j) * px_);
    fftw_execute(f.fwd);
    for (int k = 0; k < f.nspec; ++k) {
        double ar = f.spec[k][0], ai = f.spec[k][1];
        double br = f.kspec[k][0], bi = f.kspec[k][1];
        f.spec[k][0] = ar * br - ai * bi;
        f.spec[k][1] = ar * bi + ai * br;
    }
    fftw_execute(f.inv);
    out = ScalarField(g);
    for (int j = 0; j < g.ny; ++j)
        std::copy(f.real + static_cast<std::size_t>(j) * px_,
                  f.real + static_cast<std::size_t>(j) * px_ + g.nx,
                  &out.values[static_cast<std::size_t>(g.idx(0, j))]);
}

// ---------------------------------------------------------------------------
// NonlocalOperators

NonlocalOperators::NonlocalOperators(const Grid2D& g, const KernelParams& p) : grid_(g), params_(p) {
    p.validate();
    align_conv_ = std::make_unique<SpectralConvolver>(
        g, [&p](double x, double y) { return gamma_d(std::sqrt(x * x + y * y), p); });
    attr_rep_conv_ = StencilConvolver(g, p.r_adh, [&p](double x, double y) { return gamma2({x, y}, p); });
    tumor_conv_ = StencilConvolver(g, p.r_rep_tum, [&p](double x, double y) { return gamma3({x, y}, p); });
}

VectorField NonlocalOperators::alignment(const ScalarField& rho, const VectorField& u) {
    if (!(rho.grid == grid_) || !(u.grid == grid_))
        throw std::invalid_argument("nonlocal_alignment: fields must share the operator grid");
    ScalarField m1(grid_), m2(grid_);
    const std::size_t n = rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        m1.values[k] = rho.values[k] * u.comp1[k];
        m2.values[k] = rho.values[k] * u.comp2[k];
    }
    ScalarField crho;
    VectorField cm;
    alignment_convolutions(rho, m1, m2, crho, cm);
    VectorField out(grid_);
    for (std::size_t k = 0; k < n; ++k) {
        out.comp1[k] = cm.comp1[k] - u.comp1[k] * crho.values[k];
        out.comp2[k] = cm.comp2[k] - u.comp2[k] * crho.values[k];
    }
    return out;
}

void NonlocalOperators::alignment_convolutions(const ScalarField& rho, const ScalarField& m1,
                                               const ScalarField& m2, ScalarField& conv_rho,
                                               VectorField& conv_momentum) {
    if (!(rho.grid == grid_) || !(m1.grid == grid_) || !(m2.grid == grid_))
        throw std::invalid_argument("alignment_convolutions: fields must share the operator grid");
    ScalarField cm1(grid_), cm2(grid_);
    align_conv_->convolve(rho, conv_rho);
    align_conv_->convolve(m1, cm1);
    align_conv_->convolve(m2, cm2);
    conv_momentum = VectorField(grid_);
    conv_momentum.comp1 = std::move(cm1.values);
    conv_momentum.comp2 = std::move(cm2.values);
}

VectorField NonlocalOperators::attraction_repulsion(const ScalarField& rho) const {
    VectorField out;
    attr_rep_conv_.convolve(rho, out);
    return out;
}

VectorField NonlocalOperators::tumor(const ScalarField& zeta) const {
    VectorField out;
    tumor_conv_.convolve(zeta, out);
    return out;
}

VectorField nonlocal_alignment(const ScalarField& rho, const VectorField& u, const KernelParams& p) {
    NonlocalOperators ops(rho.grid, p);
    return ops.alignment(rho, u);
}

VectorField nonlocal_attr_rep(const ScalarField& rho, const KernelParams& p) {
    NonlocalOperators ops(rho.grid, p);
    return ops.attraction_repulsion(rho);
}

VectorField nonlocal_tumor(const ScalarField& zeta, const KernelParams& p) {
    NonlocalOperators ops(zeta.grid, p);
    return ops.tumor(zeta);
}

}  // namespace cellmig
