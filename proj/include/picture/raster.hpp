#ifndef PICTURE_RASTER_HPP
#define PICTURE_RASTER_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace picture {

// Dense 2D raster, row-major. Rows run along the axial (depth) direction,
// columns along the lateral direction.
class Raster {
public:
    Raster() = default;
    Raster(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0)
            throw std::invalid_argument("Raster: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return v_.size(); }

    double& at(int r, int c) { return v_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return v_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& vec() { return v_; }
    const std::vector<double>& vec() const { return v_; }

    bool same_shape(const Raster& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> v_;
};

// Boolean raster stored as bytes (0/1).
class Mask {
public:
    Mask() = default;
    Mask(int rows, int cols, uint8_t fill = 0)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return v_.size(); }

    uint8_t& at(int r, int c) { return v_[static_cast<size_t>(r) * cols_ + c]; }
    uint8_t at(int r, int c) const { return v_[static_cast<size_t>(r) * cols_ + c]; }
    uint8_t& operator[](size_t i) { return v_[i]; }
    uint8_t operator[](size_t i) const { return v_[i]; }

    bool same_shape(const Mask& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    size_t count() const {
        size_t n = 0;
        for (uint8_t b : v_) n += b;
        return n;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<uint8_t> v_;
};

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace picture

#endif
