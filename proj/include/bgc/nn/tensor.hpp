#pragma once

#include <cstddef>
#include <vector>

namespace bgc::nn {

// Channel-major dense tensor: v[(c*h + y)*w + x], all f64.
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

    std::size_t size() const { return v.size(); }
    double at(int ci, int y, int x) const {
        return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
    }
    double& at(int ci, int y, int x) {
        return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
    }
    const double* plane(int ci) const {
        return v.data() + static_cast<std::size_t>(ci) * h * w;
    }
    double* plane(int ci) {
        return v.data() + static_cast<std::size_t>(ci) * h * w;
    }
};

}  // namespace bgc::nn
