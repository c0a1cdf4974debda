#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cnn/volume.hpp"

namespace cnn {

// Labelled images of one common shape. Pixel values lie in [0, 1].
struct Dataset {
  std::string name;
  std::vector<Volume> images;
  std::vector<int> labels;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }

  // First `count` samples (or all of them when count >= size()).
  Dataset head(std::size_t count) const;
};

// Throws ErrorKind::Pairing / Range / Shape on a malformed dataset.
void check_dataset(const Dataset& data, int classes);

struct IdxImages {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::uint8_t>> grids;
};

// Big-endian IDX readers. Image files start with magic 0x00000803 followed by
// (count, rows, cols); label files with 0x00000801 followed by count.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

// Inflates gzip input (detected by the 1f 8b magic); anything else is returned unchanged.
std::vector<std::uint8_t> maybe_gunzip(std::vector<std::uint8_t> bytes);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// byte / 255, one rows x cols x 1 Volume per image.
Dataset normalize(const IdxImages& images, const std::vector<int>& labels, std::string name);
std::uint8_t denormalize(Real value);

enum class MnistSplit { Train, Test };

// Reads the canonical file names (train-images-idx3-ubyte, t10k-labels-idx1-ubyte, ...)
// from `dir`, also accepting a ".gz" suffix.
Dataset load_mnist(const std::string& dir, MnistSplit split);

// Seeded shuffle of 0..n-1 cut into contiguous chunks; the last chunk may be short.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed);

struct Batch {
  std::vector<std::reference_wrapper<const Volume>> inputs;
  std::vector<int> labels;
};

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed);

}  // namespace cnn
