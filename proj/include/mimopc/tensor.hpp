#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace mimopc {

/// Dense rank-3 array indexed as (l, i, k), stored row-major.
/// Used for per-link quantities such as large-scale fading beta[l][i][k]
/// (user k of cell i seen from BS l).
class Tensor3 {
  public:
    Tensor3() = default;
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    double &operator()(std::size_t l, std::size_t i, std::size_t k) {
        assert(l < d0_ && i < d1_ && k < d2_);
        return data_[(l * d1_ + i) * d2_ + k];
    }
    double operator()(std::size_t l, std::size_t i, std::size_t k) const {
        assert(l < d0_ && i < d1_ && k < d2_);
        return data_[(l * d1_ + i) * d2_ + k];
    }

    std::size_t dim0() const { return d0_; }
    std::size_t dim1() const { return d1_; }
    std::size_t dim2() const { return d2_; }
    std::size_t size() const { return data_.size(); }

    const std::vector<double> &data() const { return data_; }
    std::vector<double> &data() { return data_; }

    bool operator==(const Tensor3 &) const = default;

  private:
    std::size_t d0_ = 0, d1_ = 0, d2_ = 0;
    std::vector<double> data_;
};

} // namespace mimopc
