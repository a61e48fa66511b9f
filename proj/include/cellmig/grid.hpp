#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cellmig {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const;
};

/// Uniform node-centered grid on the square [0,L] x [0,L]. Boundary nodes
/// lie on the domain edge, so dx = L/(nx-1).
struct Grid2D {
    double length = 1.0;
    int nx = 51;
    int ny = 51;
    double dx = 0.02;
    double dy = 0.02;

    Grid2D() = default;
    Grid2D(double length_, int nx_, int ny_);

    double x(int i) const { return i * dx; }
    double y(int j) const { return j * dy; }
    int size() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }

    bool operator==(const Grid2D& o) const {
        return length == o.length && nx == o.nx && ny == o.ny;
    }
};

struct ScalarField {
    Grid2D grid;
    std::vector<double> values;  // row-major, index j*nx + i

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.size()), fill) {}

    double& operator()(int i, int j) { return values[static_cast<std::size_t>(grid.idx(i, j))]; }
    double operator()(int i, int j) const { return values[static_cast<std::size_t>(grid.idx(i, j))]; }

    double max_value() const;
    double min_value() const;
    bool all_finite() const;
};

struct VectorField {
    Grid2D grid;
    std::vector<double> comp1;
    std::vector<double> comp2;

    VectorField() = default;
    explicit VectorField(const Grid2D& g)
        : grid(g),
          comp1(static_cast<std::size_t>(g.size()), 0.0),
          comp2(static_cast<std::size_t>(g.size()), 0.0) {}
};

/// Conserved macroscopic unknowns w = (rho, rho*u1, rho*u2).
struct ConservedState {
    ScalarField rho;
    ScalarField m1;
    ScalarField m2;

    ConservedState() = default;
    explicit ConservedState(const Grid2D& g) : rho(g), m1(g), m2(g) {}
};

/// Density floor used when recovering u = m / max(rho, kRhoFloor).
inline constexpr double kRhoFloor = 1e-10;

/// Quadrature weight of node (i,j): dx*dy with half weight per touched edge.
double quad_weight(const Grid2D& g, int i, int j);

/// Rectangle-rule integral of f over the domain (boundary nodes half-weighted).
double total_mass(const ScalarField& f);

/// Centered-difference gradient with homogeneous Neumann mirroring: the
/// normal component vanishes identically on the boundary.
VectorField gradient_neumann(const ScalarField& f);

/// Standard 5-point Laplacian with Neumann ghost mirroring at the boundary.
ScalarField laplacian_5pt(const ScalarField& f);

/// Velocity recovery u_i = m_i / max(rho, kRhoFloor).
VectorField velocity(const ConservedState& w);

/// Bilinear interpolation of a vector field at an arbitrary point (clamped
/// to the grid extent).
Vec2 interpolate_bilinear(const VectorField& v, Vec2 p);

/// Snapshot persistence: plain-text CSV, row-major (one line per y-row),
/// header "# t=<time> nx=<nx> ny=<ny> dx=<dx>", 17 significant digits.
void write_field_csv(const std::string& path, const ScalarField& f, double time);
ScalarField read_field_csv(const std::string& path, double* time_out = nullptr);

}  // namespace cellmig
