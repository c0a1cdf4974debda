#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cnn/error.hpp"

namespace cnn {

using Real = double;

struct Shape {
  int height = 1;
  int width = 1;
  int depth = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(depth);
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

/// Dense height x width x depth array of reals.
///
/// Storage is row-major with depth innermost: the element at column x, row y,
/// channel d lives at ((y * width) + x) * depth + d. This layout is also the
/// canonical flattening used by fully-connected layers and checkpoints.
class Volume {
 public:
  Volume() : Volume(1, 1, 1) {}
  Volume(int height, int width, int depth, Real fill = 0.0);
  explicit Volume(Shape shape, Real fill = 0.0)
      : Volume(shape.height, shape.width, shape.depth, fill) {}
  Volume(Shape shape, std::vector<Real> data);

  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  int depth() const noexcept { return shape_.depth; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(int x, int y, int d) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape_.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(shape_.depth) +
           static_cast<std::size_t>(d);
  }

  // Unchecked element access.
  Real& operator()(int x, int y, int d) noexcept { return data_[index(x, y, d)]; }
  Real operator()(int x, int y, int d) const noexcept { return data_[index(x, y, d)]; }

  // Bounds-checked element access; throws ErrorKind::Index.
  Real& at(int x, int y, int d);
  Real at(int x, int y, int d) const;

  Real& operator[](std::size_t i) noexcept { return data_[i]; }
  Real operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }

  void fill(Real value);

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

Volume volume_create(int height, int width, int depth, Real fill);

// Reads (x, y, d) from `v` as if it were surrounded by `pad` cells of zeros.
// Coordinates may range over [-pad, axis + pad); anything beyond is an index error.
Real padded_get(const Volume& v, int x, int y, int d, int pad);

namespace detail {
[[noreturn]] void throw_non_finite(std::size_t index, Real value);
}

template <typename F>
Volume elementwise_map(const Volume& v, F&& f) {
  Volume out(v.shape());
  const auto in = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Real value = f(in[i]);
    if (!std::isfinite(value)) detail::throw_non_finite(i, value);
    dst[i] = value;
  }
  return out;
}

}  // namespace cnn
