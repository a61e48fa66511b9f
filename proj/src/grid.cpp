#include "cellmig/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cellmig {

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

Grid2D::Grid2D(double length_, int nx_, int ny_) : length(length_), nx(nx_), ny(ny_) {
    if (length <= 0.0) throw std::invalid_argument("Grid2D: length must be positive");
    if (nx < 2 || ny < 2) throw std::invalid_argument("Grid2D: need at least 2 nodes per axis");
    dx = length / (nx - 1);
    dy = length / (ny - 1);
}

double ScalarField::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

double ScalarField::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

bool ScalarField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double quad_weight(const Grid2D& g, int i, int j) {
    double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
    double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    return wx * wy * g.dx * g.dy;
}

double total_mass(const ScalarField& f) {
    const Grid2D& g = f.grid;
    double sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        double wy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (int i = 0; i < g.nx; ++i) {
            double wx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            row += wx * f(i, j);
        }
        sum += wy * row;
    }
    return sum * g.dx * g.dy;
}

namespace {
// Mirror index for Neumann ghost nodes: ghost at -1 reflects node 1, ghost
// at n reflects node n-2.
inline int mirror(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
}
}  // namespace

VectorField gradient_neumann(const ScalarField& f) {
    const Grid2D& g = f.grid;
    if (g.nx < 3 || g.ny < 3) throw std::invalid_argument("gradient_neumann: grid too small (need nx, ny >= 3)");
    VectorField out(g);
    const double ix = 1.0 / (2.0 * g.dx);
    const double iy = 1.0 / (2.0 * g.dy);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int ip = mirror(i + 1, g.nx), im = mirror(i - 1, g.nx);
            int jp = mirror(j + 1, g.ny), jm = mirror(j - 1, g.ny);
            std::size_t k = static_cast<std::size_t>(g.idx(i, j));
            out.comp1[k] = (f(ip, j) - f(im, j)) * ix;
            out.comp2[k] = (f(i, jp) - f(i, jm)) * iy;
        }
    }
    return out;
}

ScalarField laplacian_5pt(const ScalarField& f) {
    const Grid2D& g = f.grid;
    if (g.nx < 3 || g.ny < 3) throw std::invalid_argument("laplacian_5pt: grid too small (need nx, ny >= 3)");
    ScalarField out(g);
    const double ix2 = 1.0 / (g.dx * g.dx);
    const double iy2 = 1.0 / (g.dy * g.dy);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int ip = mirror(i + 1, g.nx), im = mirror(i - 1, g.nx);
            int jp = mirror(j + 1, g.ny), jm = mirror(j - 1, g.ny);
            double c = f(i, j);
            out(i, j) = (f(ip, j) - 2.0 * c + f(im, j)) * ix2 + (f(i, jp) - 2.0 * c + f(i, jm)) * iy2;
        }
    }
    return out;
}

VectorField velocity(const ConservedState& w) {
    VectorField u(w.rho.grid);
    const std::size_t n = w.rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        double r = std::max(w.rho.values[k], kRhoFloor);
        u.comp1[k] = w.m1.values[k] / r;
        u.comp2[k] = w.m2.values[k] / r;
    }
    return u;
}

Vec2 interpolate_bilinear(const VectorField& v, Vec2 p) {
    const Grid2D& g = v.grid;
    double fx = std::clamp(p.x / g.dx, 0.0, static_cast<double>(g.nx - 1));
    double fy = std::clamp(p.y / g.dy, 0.0, static_cast<double>(g.ny - 1));
    int i0 = std::min(static_cast<int>(fx), g.nx - 2);
    int j0 = std::min(static_cast<int>(fy), g.ny - 2);
    double tx = fx - i0, ty = fy - j0;
    auto lerp = [&](const std::vector<double>& c) {
        double c00 = c[static_cast<std::size_t>(g.idx(i0, j0))];
        double c10 = c[static_cast<std::size_t>(g.idx(i0 + 1, j0))];
        double c01 = c[static_cast<std::size_t>(g.idx(i0, j0 + 1))];
        double c11 = c[static_cast<std::size_t>(g.idx(i0 + 1, j0 + 1))];
        return (1 - ty) * ((1 - tx) * c00 + tx * c10) + ty * ((1 - tx) * c01 + tx * c11);
    };
    return {lerp(v.comp1), lerp(v.comp2)};
}

void write_field_csv(const std::string& path, const ScalarField& f, double time) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_field_csv: cannot open " + path);
    const Grid2D& g = f.grid;
    std::fprintf(fp, "# t=%.17g nx=%d ny=%d dx=%.17g\n", time, g.nx, g.ny, g.dx);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            std::fprintf(fp, i == 0 ? "%.17g" : ",%.17g", f(i, j));
        }
        std::fputc('\n', fp);
    }
    if (std::fclose(fp) != 0) throw std::runtime_error("write_field_csv: write failed for " + path);
}

ScalarField read_field_csv(const std::string& path, double* time_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_field_csv: cannot open " + path);
    std::string header;
    std::getline(in, header);
    double t = 0.0, dx = 0.0;
    int nx = 0, ny = 0;
    if (std::sscanf(header.c_str(), "# t=%lf nx=%d ny=%d dx=%lf", &t, &nx, &ny, &dx) != 4)
        throw std::runtime_error("read_field_csv: bad header in " + path);
    if (nx < 2 || ny < 2 || dx <= 0.0) throw std::runtime_error("read_field_csv: bad grid in " + path);
    Grid2D g(dx * (nx - 1), nx, ny);
    ScalarField f(g);
    std::string line;
    for (int j = 0; j < ny; ++j) {
        if (!std::getline(in, line)) throw std::runtime_error("read_field_csv: truncated file " + path);
        std::istringstream ls(line);
        std::string cell;
        for (int i = 0; i < nx; ++i) {
            if (!std::getline(ls, cell, ',')) throw std::runtime_error("read_field_csv: short row in " + path);
            f(i, j) = std::stod(cell);
        }
    }
    if (time_out) *time_out = t;
    return f;
}

}  // namespace cellmig
