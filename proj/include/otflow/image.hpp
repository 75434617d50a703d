#pragma once

#include <vector>

#include "otflow/errors.hpp"
#include "otflow/rng.hpp"
#include "otflow/tensor.hpp"

namespace otflow {

// Row-major (row, col, channel) grid of real values.
class GridImage {
public:
    GridImage() = default;
    GridImage(int height, int width, int channels = 1, double fill = 0.0);
    static GridImage from_vector(int height, int width, const Vector& flat);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    int channels() const noexcept { return c_; }
    int pixel_count() const noexcept { return h_ * w_; }

    double at(int u, int v, int ch = 0) const {
        return v_[(static_cast<std::size_t>(u) * w_ + v) * c_ + ch];
    }
    double& at(int u, int v, int ch = 0) {
        return v_[(static_cast<std::size_t>(u) * w_ + v) * c_ + ch];
    }

    const std::vector<double>& raw() const noexcept { return v_; }
    std::vector<double>& raw() noexcept { return v_; }

    Vector to_vector() const;
    double max_abs() const;

private:
    int h_ = 0;
    int w_ = 0;
    int c_ = 1;
    std::vector<double> v_;
};

void require_same_shape(const GridImage& a, const GridImage& b,
                        const char* where);
void require_single_channel(const GridImage& a, const char* where);

// Forward differences with replicate boundary: the last row/column gets a
// zero vertical/horizontal difference. Outputs du (down) and dv (right).
struct ImageGradient {
    GridImage du;
    GridImage dv;
};
ImageGradient forward_differences(const GridImage& img);

// Gaussian blur, sigma in pixels, kernel truncated at 4*sigma and
// renormalized, replicate boundary. Separable passes.
GridImage gaussian_blur(const GridImage& img, double sigma);

// Seeded synthetic image: a sum of Gaussian bumps plus mild pixel noise.
// This is the desk-scale stand-in for a natural image distribution.
GridImage gaussian_bump_image(int height, int width, RngStream& rng,
                              int n_bumps = 2, double noise_std = 0.05);

}  // namespace otflow
