#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cellmig/grid.hpp"

namespace cellmig {

/// Simple RGB raster with a zlib-backed PNG encoder.
class Image {
public:
    Image(int width, int height);

    int width() const { return w_; }
    int height() const { return h_; }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void circle(int cx, int cy, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void write_png(const std::string& path) const;

private:
    int w_, h_;
    std::vector<std::uint8_t> pixels_;
};

struct PlotOptions {
    int scale = 8;          // pixels per grid node
    int quiver_stride = 4;  // node decimation for momentum arrows
};

/// Density heatmap (origin at the lower-left corner).
Image render_heatmap(const ScalarField& field, const PlotOptions& opt = {});

/// Heatmap with momentum arrows sampled on a decimated grid.
Image render_quiver_overlay(const ScalarField& rho, const VectorField& momentum,
                            const PlotOptions& opt = {});

/// Heatmap with circles of the given physical radius at the given positions.
Image render_agents_overlay(const ScalarField& rho, const std::vector<Vec2>& positions,
                            double radius, const PlotOptions& opt = {});

}  // namespace cellmig
