#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cnn/arch.hpp"
#include "cnn/volume.hpp"

namespace cnn {

/// Learnable state of a convolutional layer.
///
/// One R x R x D_in kernel per output slice, shared by every spatial position
/// of that slice, plus one bias per kernel. Kernel depth always equals the
/// input depth.
struct ConvParams {
  int field = 1;
  int stride = 1;
  int pad = 0;
  std::vector<Volume> kernels;
  std::vector<Real> biases;

  ConvParams() = default;
  ConvParams(int in_depth, const ConvLayer& layer);

  int kernel_count() const noexcept { return static_cast<int>(kernels.size()); }
  int in_depth() const noexcept { return kernels.empty() ? 0 : kernels.front().depth(); }
  std::size_t parameter_count() const noexcept;

  // Parameter storage in checkpoint order: kernel 0..K-1, then biases.
  std::vector<std::span<Real>> blocks();
  std::vector<std::span<const Real>> blocks() const;

  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

/// Learnable state of a fully-connected layer; weights are n_out x n_in row-major.
struct FcParams {
  int inputs = 0;
  int outputs = 0;
  std::vector<Real> weights;
  std::vector<Real> biases;

  FcParams() = default;
  FcParams(int inputs, int outputs);

  Real& weight(int out, int in) noexcept {
    return weights[static_cast<std::size_t>(out) * static_cast<std::size_t>(inputs) +
                   static_cast<std::size_t>(in)];
  }
  Real weight(int out, int in) const noexcept {
    return weights[static_cast<std::size_t>(out) * static_cast<std::size_t>(inputs) +
                   static_cast<std::size_t>(in)];
  }
  std::size_t parameter_count() const noexcept { return weights.size() + biases.size(); }

  std::vector<std::span<Real>> blocks();
  std::vector<std::span<const Real>> blocks() const;

  friend bool operator==(const FcParams&, const FcParams&) = default;
};

// Gradients mirror their parameter block layout exactly.
struct ConvGradients {
  std::vector<Volume> kernels;
  std::vector<Real> biases;
  Volume input;

  ConvGradients(const ConvParams& params, const Shape& input_shape);

  std::vector<std::span<Real>> blocks();
  std::vector<std::span<const Real>> blocks() const;
};

struct FcGradients {
  std::vector<Real> weights;
  std::vector<Real> biases;
  Volume input;

  FcGradients(const FcParams& params, const Shape& input_shape);

  std::vector<std::span<Real>> blocks();
  std::vector<std::span<const Real>> blocks() const;
};

Volume conv_forward(const Volume& input, const ConvParams& params);
ConvGradients conv_backward(const Volume& input, const ConvParams& params, const Volume& upstream);

Volume relu_forward(const Volume& input);
// Subgradient at exactly zero is taken as zero.
Volume relu_backward(const Volume& input, const Volume& upstream);

// For max pooling, switches[i] holds the flat input index that produced output
// element i (first maximum in row-major window order). Empty for other kinds.
struct PoolResult {
  Volume output;
  std::vector<std::size_t> switches;
};

PoolResult pool_forward(const Volume& input, const PoolSpec& spec);
Volume pool_backward(const Volume& input, const PoolSpec& spec,
                     std::span<const std::size_t> switches, const Volume& upstream);

Volume fc_forward(const Volume& input, const FcParams& params);
FcGradients fc_backward(const Volume& input, const FcParams& params, const Volume& upstream);

struct LossResult {
  Real loss;
  Volume grad;
};

// -log softmax(scores)[label] with max-subtraction; grad = softmax - onehot.
LossResult softmax_cross_entropy(const Volume& scores, int label);

}  // namespace cnn
