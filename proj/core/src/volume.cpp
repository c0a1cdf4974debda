#include "cnn/volume.hpp"

#include <algorithm>
#include <sstream>

namespace cnn {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << shape.height << 'x' << shape.width << 'x' << shape.depth;
  return os.str();
}

Volume::Volume(int height, int width, int depth, Real fill) {
  if (height < 1 || width < 1 || depth < 1) {
    std::ostringstream os;
    os << "volume dimensions must be positive, got " << height << 'x' << width << 'x' << depth;
    throw Error(ErrorKind::Dimension, os.str());
  }
  shape_ = Shape{height, width, depth};
  data_.assign(shape_.size(), fill);
}

Volume::Volume(Shape shape, std::vector<Real> data) : Volume(shape) {
  if (data.size() != shape_.size()) {
    std::ostringstream os;
    os << "volume " << to_string(shape_) << " needs " << shape_.size() << " elements, got "
       << data.size();
    throw Error(ErrorKind::Shape, os.str());
  }
  data_ = std::move(data);
}

static void check_bounds(const Shape& s, int x, int y, int d) {
  if (x < 0 || x >= s.width || y < 0 || y >= s.height || d < 0 || d >= s.depth) {
    std::ostringstream os;
    os << "(" << x << "," << y << "," << d << ") outside volume " << to_string(s);
    throw Error(ErrorKind::Index, os.str());
  }
}

Real& Volume::at(int x, int y, int d) {
  check_bounds(shape_, x, y, d);
  return (*this)(x, y, d);
}

Real Volume::at(int x, int y, int d) const {
  check_bounds(shape_, x, y, d);
  return (*this)(x, y, d);
}

void Volume::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

Volume volume_create(int height, int width, int depth, Real fill) {
  return Volume(height, width, depth, fill);
}

Real padded_get(const Volume& v, int x, int y, int d, int pad) {
  if (pad < 0) throw Error(ErrorKind::Index, "negative padding");
  if (d < 0 || d >= v.depth()) {
    throw Error(ErrorKind::Index, "channel " + std::to_string(d) + " outside depth " +
                                      std::to_string(v.depth()));
  }
  if (x < -pad || x >= v.width() + pad || y < -pad || y >= v.height() + pad) {
    std::ostringstream os;
    os << "(" << x << "," << y << ") outside padded extent of " << to_string(v.shape())
       << " with pad " << pad;
    throw Error(ErrorKind::Index, os.str());
  }
  if (x < 0 || x >= v.width() || y < 0 || y >= v.height()) return 0.0;
  return v(x, y, d);
}

namespace detail {
void throw_non_finite(std::size_t index, Real value) {
  std::ostringstream os;
  os << "elementwise map produced non-finite value " << value << " at index " << index;
  throw Error(ErrorKind::Numeric, os.str());
}
}  // namespace detail

}  // namespace cnn
