#include "otflow/image.hpp"

#include <cmath>
#include <string>

namespace otflow {

GridImage::GridImage(int height, int width, int channels, double fill)
    : h_(height), w_(width), c_(channels),
      v_(static_cast<std::size_t>(height) * width * channels, fill) {
    if (height <= 0 || width <= 0 || channels <= 0) {
        throw RangeError("grid image dims must be positive");
    }
}

GridImage GridImage::from_vector(int height, int width, const Vector& flat) {
    if (flat.dim() != height * width) {
        throw ShapeMismatch("vector length " + std::to_string(flat.dim()) +
                            " != " + std::to_string(height * width));
    }
    GridImage img(height, width, 1);
    img.v_ = flat.raw();
    return img;
}

Vector GridImage::to_vector() const { return Vector::from(v_); }

double GridImage::max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::fabs(x));
    return m;
}

void require_same_shape(const GridImage& a, const GridImage& b,
                        const char* where) {
    if (a.height() != b.height() || a.width() != b.width() ||
        a.channels() != b.channels()) {
        throw ShapeMismatch(std::string(where) + ": grid shapes differ");
    }
}

void require_single_channel(const GridImage& a, const char* where) {
    if (a.channels() != 1) {
        throw ShapeMismatch(std::string(where) + ": expected single channel");
    }
}

ImageGradient forward_differences(const GridImage& img) {
    require_single_channel(img, "forward_differences");
    const int h = img.height();
    const int w = img.width();
    ImageGradient g{GridImage(h, w), GridImage(h, w)};
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            g.du.at(u, v) = (u + 1 < h) ? img.at(u + 1, v) - img.at(u, v) : 0.0;
            g.dv.at(u, v) = (v + 1 < w) ? img.at(u, v + 1) - img.at(u, v) : 0.0;
        }
    }
    return g;
}

GridImage gaussian_blur(const GridImage& img, double sigma) {
    require_single_channel(img, "gaussian_blur");
    if (!(sigma > 0.0)) throw RangeError("blur sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double k = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = k;
        total += k;
    }
    for (auto& k : kernel) k /= total;

    const int h = img.height();
    const int w = img.width();
    auto clamp = [](int x, int n) { return x < 0 ? 0 : (x >= n ? n - 1 : x); };

    GridImage tmp(h, w);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                s += kernel[static_cast<std::size_t>(i + radius)] *
                     img.at(u, clamp(v + i, w));
            }
            tmp.at(u, v) = s;
        }
    }
    GridImage out(h, w);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                s += kernel[static_cast<std::size_t>(i + radius)] *
                     tmp.at(clamp(u + i, h), v);
            }
            out.at(u, v) = s;
        }
    }
    return out;
}

GridImage gaussian_bump_image(int height, int width, RngStream& rng,
                              int n_bumps, double noise_std) {
    GridImage img(height, width);
    for (int b = 0; b < n_bumps; ++b) {
        const double cu = rng.uniform(0.2, 0.8) * (height - 1);
        const double cv = rng.uniform(0.2, 0.8) * (width - 1);
        const double amp = rng.uniform(0.5, 1.5);
        const double sig = rng.uniform(0.08, 0.2) * std::min(height, width);
        for (int u = 0; u < height; ++u) {
            for (int v = 0; v < width; ++v) {
                const double d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
                img.at(u, v) += amp * std::exp(-0.5 * d2 / (sig * sig));
            }
        }
    }
    if (noise_std > 0.0) {
        for (auto& x : img.raw()) x += noise_std * rng.normal();
    }
    return img;
}

}  // namespace otflow
