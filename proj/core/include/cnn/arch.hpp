#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cnn/volume.hpp"

namespace cnn {

enum class PoolKind { Max, Average, L2Norm, L1Norm };

std::string_view to_string(PoolKind kind) noexcept;

struct PoolSpec {
  PoolKind kind = PoolKind::Max;
  int window = 2;
  int stride = 2;

  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

struct InputLayer {
  Shape shape;
  friend bool operator==(const InputLayer&, const InputLayer&) = default;
};

struct ConvLayer {
  int field = 3;   // receptive field size R
  int kernels = 1; // output depth K
  int stride = 1;  // S
  int pad = 0;     // Z
  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

struct PoolLayer {
  PoolSpec pool;
  friend bool operator==(const PoolLayer&, const PoolLayer&) = default;
};

struct FcLayer {
  int outputs = 1;
  friend bool operator==(const FcLayer&, const FcLayer&) = default;
};

using LayerSpec = std::variant<InputLayer, ConvLayer, ReluLayer, PoolLayer, FcLayer>;

enum class LayerKind { Input, Conv, Relu, Pool, Fc };

LayerKind kind_of(const LayerSpec& layer) noexcept;
std::string_view to_string(LayerKind kind) noexcept;

struct ArchSpec {
  std::string name;
  std::vector<LayerSpec> layers;

  const Shape& input_shape() const;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// Checks structure and hyperparameter ranges (not spatial fit; that is plan()'s job).
// Throws ErrorKind::ArchParse describing the first violation.
void validate(const ArchSpec& arch);

// Text architecture format, one layer per line:
//
//   name NAME
//   input H W D
//   conv R K S Z
//   relu
//   pool {max|avg|l2|l1} WINDOW STRIDE
//   fc N
//
// '#' starts a comment. Blank lines are ignored. `name` is optional and may
// appear once, before the input layer.
ArchSpec parse_arch(std::string_view text, std::string default_name = "arch");
ArchSpec load_arch_file(const std::string& path);

// Canonical rendering; parse_arch(format_arch(a)) == a.
std::string format_arch(const ArchSpec& arch);

}  // namespace cnn
