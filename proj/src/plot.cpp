#include "cellmig/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace cellmig {

Image::Image(int width, int height) : w_(width), h_(height), pixels_(static_cast<std::size_t>(width) * height * 3, 0) {
    if (width < 1 || height < 1) throw std::invalid_argument("Image: positive dimensions required");
}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
    std::size_t k = 3 * (static_cast<std::size_t>(y) * w_ + x);
    pixels_[k] = r;
    pixels_[k + 1] = g;
    pixels_[k + 2] = b;
}

void Image::line(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        set(x0, y0, r, g, b);
        if (x0 == x1 && y0 == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
    }
}

void Image::circle(int cx, int cy, int radius, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    int x = radius, y = 0, err = 1 - radius;
    while (x >= y) {
        set(cx + x, cy + y, r, g, b); set(cx + y, cy + x, r, g, b);
        set(cx - y, cy + x, r, g, b); set(cx - x, cy + y, r, g, b);
        set(cx - x, cy - y, r, g, b); set(cx - y, cy - x, r, g, b);
        set(cx + y, cy - x, r, g, b); set(cx + x, cy - y, r, g, b);
        ++y;
        if (err < 0) err += 2 * y + 1;
        else { --x; err += 2 * (y - x) + 1; }
    }
}

namespace {

void put_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

void write_chunk(std::FILE* fp, const char type[4], const std::vector<std::uint8_t>& data) {
    std::vector<std::uint8_t> head;
    put_u32(head, static_cast<std::uint32_t>(data.size()));
    std::fwrite(head.data(), 1, 4, fp);
    std::fwrite(type, 1, 4, fp);
    if (!data.empty()) std::fwrite(data.data(), 1, data.size(), fp);
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<std::uint8_t> tail;
    put_u32(tail, crc);
    std::fwrite(tail.data(), 1, 4, fp);
}

}  // namespace

void Image::write_png(const std::string& path) const {
    // filter byte 0 per scanline, then one zlib stream
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(h_) * (static_cast<std::size_t>(w_) * 3 + 1));
    for (int y = 0; y < h_; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = &pixels_[3 * static_cast<std::size_t>(y) * w_];
        raw.insert(raw.end(), row, row + 3 * static_cast<std::size_t>(w_));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("write_png: zlib compression failed");
    compressed.resize(bound);

    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::fwrite(sig, 1, 8, fp);
    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(w_));
    put_u32(ihdr, static_cast<std::uint32_t>(h_));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    write_chunk(fp, "IHDR", ihdr);
    write_chunk(fp, "IDAT", compressed);
    write_chunk(fp, "IEND", {});
    if (std::fclose(fp) != 0) throw std::runtime_error("write_png: write failed for " + path);
}

namespace {

// compact blue -> green -> yellow colormap
void colormap(double t, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
    t = std::clamp(t, 0.0, 1.0);
    static const double stops[5][3] = {
        {0.267, 0.005, 0.329}, {0.229, 0.322, 0.546}, {0.127, 0.566, 0.551},
        {0.369, 0.789, 0.383}, {0.993, 0.906, 0.144},
    };
    double x = t * 4.0;
    int k = std::min(static_cast<int>(x), 3);
    double f = x - k;
    r = static_cast<std::uint8_t>(255.0 * (stops[k][0] + f * (stops[k + 1][0] - stops[k][0])));
    g = static_cast<std::uint8_t>(255.0 * (stops[k][1] + f * (stops[k + 1][1] - stops[k][1])));
    b = static_cast<std::uint8_t>(255.0 * (stops[k][2] + f * (stops[k + 1][2] - stops[k][2])));
}

// image y axis points down; flip so the domain origin sits lower-left
int to_py(double yfrac, int height) { return height - 1 - static_cast<int>(yfrac * (height - 1)); }

}  // namespace

Image render_heatmap(const ScalarField& field, const PlotOptions& opt) {
    const Grid2D& g = field.grid;
    Image img(g.nx * opt.scale, g.ny * opt.scale);
    double lo = field.min_value(), hi = field.max_value();
    double span = hi - lo > 0.0 ? hi - lo : 1.0;
    for (int py = 0; py < img.height(); ++py) {
        int j = (img.height() - 1 - py) / opt.scale;
        for (int px = 0; px < img.width(); ++px) {
            int i = px / opt.scale;
            std::uint8_t r, gr, b;
            colormap((field(i, j) - lo) / span, r, gr, b);
            img.set(px, py, r, gr, b);
        }
    }
    return img;
}

Image render_quiver_overlay(const ScalarField& rho, const VectorField& momentum, const PlotOptions& opt) {
    if (!(rho.grid == momentum.grid))
        throw std::invalid_argument("render_quiver_overlay: snapshot and overlay grids differ");
    Image img = render_heatmap(rho, opt);
    const Grid2D& g = rho.grid;
    double vmax = 1e-300;
    for (std::size_t k = 0; k < momentum.comp1.size(); ++k)
        vmax = std::max(vmax, std::hypot(momentum.comp1[k], momentum.comp2[k]));
    double arrow = 0.9 * opt.quiver_stride * opt.scale;
    for (int j = 0; j < g.ny; j += opt.quiver_stride) {
        for (int i = 0; i < g.nx; i += opt.quiver_stride) {
            double mx = momentum.comp1[static_cast<std::size_t>(g.idx(i, j))] / vmax;
            double my = momentum.comp2[static_cast<std::size_t>(g.idx(i, j))] / vmax;
            int x0 = i * opt.scale + opt.scale / 2;
            int y0 = to_py(static_cast<double>(j) / (g.ny - 1), img.height());
            img.line(x0, y0, x0 + static_cast<int>(arrow * mx), y0 - static_cast<int>(arrow * my), 0, 0, 0);
        }
    }
    return img;
}

Image render_agents_overlay(const ScalarField& rho, const std::vector<Vec2>& positions, double radius,
                            const PlotOptions& opt) {
    Image img = render_heatmap(rho, opt);
    const Grid2D& g = rho.grid;
    int pr = std::max(1, static_cast<int>(radius / g.length * (img.width() - 1)));
    for (const Vec2& p : positions) {
        int cx = static_cast<int>(p.x / g.length * (img.width() - 1));
        int cy = to_py(p.y / g.length, img.height());
        img.circle(cx, cy, pr, 0, 0, 0);
    }
    return img;
}

}  // namespace cellmig
