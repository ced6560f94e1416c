#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pano/errors.hpp"
#include "pano/sphere.hpp"

namespace pano {

/// C x H x W feature grid on the ERP lattice, stored channel-planar and
/// row-major within each channel.
class ErpTensor {
public:
    ErpTensor() = default;

    ErpTensor(int channels, GridShape shape, double fill = 0.0)
        : channels_(channels), shape_(shape) {
        validate(shape);
        if (channels < 1) throw ShapeError("ErpTensor: channel count must be positive");
        data_.assign(static_cast<std::size_t>(channels) * shape.area(), fill);
    }

    ErpTensor(int channels, GridShape shape, std::vector<double> data)
        : channels_(channels), shape_(shape), data_(std::move(data)) {
        validate(shape);
        if (channels < 1) throw ShapeError("ErpTensor: channel count must be positive");
        if (data_.size() != static_cast<std::size_t>(channels) * shape.area()) {
            throw ShapeError("ErpTensor: data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(channels) + "x" + to_string(shape));
        }
        for (double x : data_) {
            if (!std::isfinite(x)) throw DomainError("ErpTensor: non-finite entry");
        }
    }

    int channels() const noexcept { return channels_; }
    const GridShape& shape() const noexcept { return shape_; }
    int height() const noexcept { return shape_.height; }
    int width() const noexcept { return shape_.width; }

    double& at(int c, int row, int col) noexcept { return data_[index(c, row, col)]; }
    double at(int c, int row, int col) const noexcept { return data_[index(c, row, col)]; }

    std::span<double> channel(int c) noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * shape_.area(),
                static_cast<std::size_t>(shape_.area())};
    }
    std::span<const double> channel(int c) const noexcept {
        return {data_.data() + static_cast<std::size_t>(c) * shape_.area(),
                static_cast<std::size_t>(shape_.area())};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const ErpTensor&, const ErpTensor&) = default;

private:
    std::size_t index(int c, int row, int col) const noexcept {
        return (static_cast<std::size_t>(c) * shape_.height + row) * shape_.width + col;
    }

    int channels_ = 0;
    GridShape shape_{};
    std::vector<double> data_;
};

inline void require_same_layout(const ErpTensor& a, const ErpTensor& b, const char* what) {
    if (a.channels() != b.channels() || a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": tensor layouts differ");
    }
}

inline ErpTensor operator+(const ErpTensor& a, const ErpTensor& b) {
    require_same_layout(a, b, "tensor add");
    ErpTensor out = a;
    auto dst = out.data();
    auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    return out;
}

inline double max_abs_difference(const ErpTensor& a, const ErpTensor& b) {
    require_same_layout(a, b, "max_abs_difference");
    double worst = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    return worst;
}

}  // namespace pano
