#include "cnn/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "cnn/rng.hpp"

namespace cnn {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) {
    throw Error(ErrorKind::Length, "IDX header truncated at byte " + std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t magic) {
  const auto got = read_be32(bytes, 0);
  if (got != magic) {
    std::ostringstream os;
    os << "IDX magic 0x" << std::hex << got << ", expected 0x" << magic;
    throw Error(ErrorKind::Format, os.str());
  }
}

void expect_length(std::size_t got, std::size_t expected) {
  if (got != expected) {
    throw Error(ErrorKind::Length, "IDX payload is " + std::to_string(got) + " bytes, expected " +
                                       std::to_string(expected));
  }
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, size());
  Dataset out;
  out.name = name;
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(count));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

void check_dataset(const Dataset& data, int classes) {
  if (data.images.size() != data.labels.size()) {
    throw Error(ErrorKind::Pairing, "dataset has " + std::to_string(data.images.size()) +
                                        " images but " + std::to_string(data.labels.size()) +
                                        " labels");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] < 0 || data.labels[i] >= classes) {
      throw Error(ErrorKind::Range, "label " + std::to_string(data.labels[i]) + " at sample " +
                                        std::to_string(i) + " outside [0, " +
                                        std::to_string(classes) + ")");
    }
    if (data.images[i].shape() != data.images.front().shape()) {
      throw Error(ErrorKind::Shape, "sample " + std::to_string(i) + " has shape " +
                                        to_string(data.images[i].shape()));
    }
  }
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, kImageMagic);
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t grid = rows * cols;
  if (grid != 0 && count > (bytes.size() - 16) / grid) {
    throw Error(ErrorKind::Length, "IDX header promises " + std::to_string(count) + " images of " +
                                       std::to_string(rows) + "x" + std::to_string(cols) + " but payload is " +
                                       std::to_string(bytes.size() - 16) + " bytes");
  }
  expect_length(bytes.size() - 16, count * grid);
  if (count > 0 && grid == 0) throw Error(ErrorKind::Format, "IDX images with zero extent");

  IdxImages out;
  out.rows = static_cast<int>(rows);
  out.cols = static_cast<int>(cols);
  out.grids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto* start = bytes.data() + 16 + i * grid;
    out.grids.emplace_back(start, start + grid);
  }
  return out;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  expect_magic(bytes, kLabelMagic);
  const std::size_t count = read_be32(bytes, 4);
  expect_length(bytes.size() - 8, count);
  std::vector<int> labels;
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = bytes[8 + i];
    if (label > 9) {
      throw Error(ErrorKind::Range,
                  "label byte " + std::to_string(label) + " at index " + std::to_string(i));
    }
    labels.push_back(label);
  }
  return labels;
}

std::vector<std::uint8_t> maybe_gunzip(std::vector<std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 0x1f || bytes[1] != 0x8b) return bytes;

  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(ErrorKind::Format, "inflateInit2 failed");
  zs.next_in = bytes.data();
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorKind::Format, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorKind::Length, "truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset normalize(const IdxImages& images, const std::vector<int>& labels, std::string name) {
  if (images.grids.size() != labels.size()) {
    throw Error(ErrorKind::Pairing, std::to_string(images.grids.size()) + " images vs " +
                                        std::to_string(labels.size()) + " labels");
  }
  Dataset out;
  out.name = std::move(name);
  out.labels = labels;
  out.images.reserve(images.grids.size());
  for (const auto& grid : images.grids) {
    Volume v(images.rows, images.cols, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = static_cast<Real>(grid[i]) / 255.0;
    out.images.push_back(std::move(v));
  }
  return out;
}

std::uint8_t denormalize(Real value) {
  const Real scaled = std::round(value * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Dataset load_mnist(const std::string& dir, MnistSplit split) {
  const std::string prefix = split == MnistSplit::Train ? "train" : "t10k";
  const auto locate = [&](const std::string& stem) {
    const auto base = std::filesystem::path(dir) / stem;
    for (const auto& candidate : {base, std::filesystem::path(base.string() + ".gz")}) {
      if (std::filesystem::exists(candidate)) return candidate.string();
    }
    throw Error(ErrorKind::Io, "missing MNIST file " + base.string() + "[.gz]");
  };
  const auto images = parse_idx_images(maybe_gunzip(read_file_bytes(locate(prefix + "-images-idx3-ubyte"))));
  const auto labels = parse_idx_labels(maybe_gunzip(read_file_bytes(locate(prefix + "-labels-idx1-ubyte"))));
  return normalize(images, labels, "mnist-" + prefix);
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed) {
  if (batch_size == 0) throw Error(ErrorKind::Precondition, "batch size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed) {
  if (data.images.size() != data.labels.size()) {
    throw Error(ErrorKind::Pairing, "images and labels differ in length");
  }
  std::vector<Batch> out;
  for (const auto& chunk : batch_indices(data.size(), batch_size, seed)) {
    Batch b;
    b.inputs.reserve(chunk.size());
    b.labels.reserve(chunk.size());
    for (const auto i : chunk) {
      b.inputs.emplace_back(std::cref(data.images[i]));
      b.labels.push_back(data.labels[i]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace cnn
