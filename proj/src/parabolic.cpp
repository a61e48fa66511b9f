#include "cellmig/parabolic.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "cellmig/errors.hpp"

namespace cellmig {

namespace {
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void ChemoParams::validate() const {
    if (diffusion < 0.0) throw std::invalid_argument("ChemoParams: D >= 0 required");
    if (kappa < 0.0) throw std::invalid_argument("ChemoParams: kappa >= 0 required");
    if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("ChemoParams: theta in [0,1] required");
    if (alpha1 < 0.0 || alpha2 < 0.0) throw std::invalid_argument("ChemoParams: alpha1, alpha2 >= 0 required");
}

ScalarField g_production(const ScalarField& rho, const ChemoParams& cp) {
    ScalarField g(rho.grid);
    const std::size_t n = rho.values.size();
    if (cp.source_mode == ChemoParams::SourceMode::linear) {
        for (std::size_t k = 0; k < n; ++k) g.values[k] = cp.a_lin * rho.values[k];
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            double r = rho.values[k];
            g.values[k] = cp.alpha1 * r / (1.0 + cp.alpha2 * r * r);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// ParabolicSolver: the mirrored Laplacian is diagonal in the DCT-I basis
// cos(pi k i / (n-1)) with eigenvalues -2 (1 - cos(pi k / (n-1))) / dx^2,
// including the boundary rows.

struct ParabolicSolver::Impl {
    Grid2D grid;
    double* buf = nullptr;
    fftw_plan dct = nullptr;  // REDFT00 is its own inverse up to scaling
    std::vector<double> eig_x, eig_y;
    double norm = 1.0;

    ~Impl() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        if (dct) fftw_destroy_plan(dct);
        if (buf) fftw_free(buf);
    }
};

ParabolicSolver::ParabolicSolver(const Grid2D& grid) : impl_(std::make_unique<Impl>()) {
    if (grid.nx < 3 || grid.ny < 3) throw std::invalid_argument("ParabolicSolver: grid too small");
    Impl& im = *impl_;
    im.grid = grid;
    im.buf = fftw_alloc_real(static_cast<std::size_t>(grid.nx) * grid.ny);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        im.dct = fftw_plan_r2r_2d(grid.ny, grid.nx, im.buf, im.buf, FFTW_REDFT00, FFTW_REDFT00,
                                  FFTW_ESTIMATE);
    }
    if (!im.dct) throw NumericalError("ParabolicSolver: FFTW plan creation failed");
    im.eig_x.resize(static_cast<std::size_t>(grid.nx));
    im.eig_y.resize(static_cast<std::size_t>(grid.ny));
    for (int k = 0; k < grid.nx; ++k)
        im.eig_x[static_cast<std::size_t>(k)] =
            -2.0 * (1.0 - std::cos(M_PI * k / (grid.nx - 1))) / (grid.dx * grid.dx);
    for (int k = 0; k < grid.ny; ++k)
        im.eig_y[static_cast<std::size_t>(k)] =
            -2.0 * (1.0 - std::cos(M_PI * k / (grid.ny - 1))) / (grid.dy * grid.dy);
    im.norm = 1.0 / (4.0 * static_cast<double>(grid.nx - 1) * (grid.ny - 1));
}

ParabolicSolver::~ParabolicSolver() = default;

ScalarField ParabolicSolver::step(const ScalarField& phi, const ScalarField& s_n, double dt,
                                  const ChemoParams& cp, const ScalarField* s_np1) const {
    cp.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("theta_step: dt > 0 required");
    const Impl& im = *impl_;
    const Grid2D& g = im.grid;
    if (!(phi.grid == g) || !(s_n.grid == g) || (s_np1 && !(s_np1->grid == g)))
        throw std::invalid_argument("theta_step: fields must share one grid");

    const double th = cp.theta;
    const std::size_t n = phi.values.size();

    // rhs = (I + (1-theta) dt (D L - kappa)) phi + dt * theta-averaged source
    ScalarField lap = laplacian_5pt(phi);
    const ScalarField& sp = s_np1 ? *s_np1 : s_n;
    for (std::size_t k = 0; k < n; ++k)
        im.buf[k] = phi.values[k] +
                    (1.0 - th) * dt * (cp.diffusion * lap.values[k] - cp.kappa * phi.values[k]) +
                    dt * (th * sp.values[k] + (1.0 - th) * s_n.values[k]);

    ScalarField out(g);
    if (th == 0.0) {
        for (std::size_t k = 0; k < n; ++k) out.values[k] = im.buf[k];
        return out;
    }

    fftw_execute(im.dct);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double lam = im.eig_x[static_cast<std::size_t>(i)] + im.eig_y[static_cast<std::size_t>(j)];
            double denom = 1.0 + th * dt * (cp.kappa - cp.diffusion * lam);
            im.buf[static_cast<std::size_t>(j * g.nx + i)] *= im.norm / denom;
        }
    }
    fftw_execute(im.dct);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = im.buf[k];
    if (!out.all_finite()) throw NumericalError("theta_step: non-finite chemoattractant state");
    return out;
}

ScalarField theta_step(const ScalarField& phi, const ScalarField& s_n, double dt, const ChemoParams& cp,
                       const ScalarField* s_np1) {
    ParabolicSolver solver(phi.grid);
    return solver.step(phi, s_n, dt, cp, s_np1);
}

}  // namespace cellmig
