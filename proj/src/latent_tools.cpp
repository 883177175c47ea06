#include "abp/latent_tools.hpp"

#include <algorithm>
#include <cmath>

#include "abp/errors.hpp"

namespace abp {

Tensor sample_prior(std::span<const int> shape, Rng& rng) {
    Tensor z(std::vector<int>(shape.begin(), shape.end()));
    for (double& v : z.data) v = rng.normal();
    return z;
}

Tensor slerp(const Tensor& a, const Tensor& b, double t) {
    if (!a.same_shape(b)) {
        throw ShapeError("slerp: shape " + shape_string(a.shape) + " vs " +
                         shape_string(b.shape));
    }
    const double na = std::sqrt(squared_norm(a));
    const double nb = std::sqrt(squared_norm(b));
    if (na == 0.0 && nb == 0.0) throw ShapeError("slerp: both endpoints are zero");

    auto lerp = [&]() {
        Tensor out = scaled(a, 1.0 - t);
        axpy(t, b, out);
        return out;
    };
    if (na == 0.0 || nb == 0.0) return lerp();

    const double cos_angle = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    const double angle = std::acos(cos_angle);
    const double sin_angle = std::sin(angle);
    if (sin_angle < 1e-9) return lerp();  // collinear endpoints

    const double ca = std::sin((1.0 - t) * angle) / sin_angle;
    const double cb = std::sin(t * angle) / sin_angle;
    Tensor out = scaled(a, ca);
    axpy(cb, b, out);
    return out;
}

std::vector<Tensor> latent_grid_corners(const Tensor& tl, const Tensor& tr, const Tensor& bl,
                                        const Tensor& br, int n) {
    if (n < 2) throw ShapeError("latent grid needs n >= 2");
    if (tl.size() < 2) throw ShapeError("corner interpolation needs latent dimension >= 2");
    if (!tl.same_shape(tr) || !tl.same_shape(bl) || !tl.same_shape(br)) {
        throw ShapeError("latent grid corners must share one shape");
    }
    std::vector<Tensor> grid;
    grid.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i) / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double tj = static_cast<double>(j) / (n - 1);
            const Tensor top = slerp(tl, tr, tj);
            const Tensor bottom = slerp(bl, br, tj);
            grid.push_back(slerp(top, bottom, ti));
        }
    }
    return grid;
}

std::vector<Tensor> latent_grid_range(double lo, double hi, int n) {
    if (n < 2) throw ShapeError("latent grid needs n >= 2");
    const double step = (hi - lo) / (n - 1);
    std::vector<Tensor> grid;
    grid.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Tensor z({2});
            z[0] = j == n - 1 ? hi : lo + step * j;
            z[1] = i == n - 1 ? hi : lo + step * i;
            grid.push_back(std::move(z));
        }
    }
    return grid;
}

}  // namespace abp
