#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cnn/arch.hpp"
#include "cnn/layers.hpp"
#include "cnn/planner.hpp"

namespace cnn {

// Per-layer learnable state, index-aligned with ArchSpec::layers. Layers
// without parameters (input, relu, pool) hold std::monostate.
using LayerParams = std::variant<std::monostate, ConvParams, FcParams>;
using LayerGradients = std::variant<std::monostate, ConvGradients, FcGradients>;

// Everything a backward pass needs from the matching forward pass.
// activations[i] is the output of layer i; activations[0] is the input itself.
struct ForwardTrace {
  std::vector<Volume> activations;
  std::vector<std::vector<std::size_t>> switches;
};

class Network {
 public:
  // Builds zero-initialised parameters. Throws if plan(arch) fails.
  explicit Network(ArchSpec arch);

  const ArchSpec& arch() const noexcept { return arch_; }
  const PlanReport& plan() const noexcept { return plan_; }

  std::vector<LayerParams>& layers() noexcept { return layers_; }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const noexcept { return plan_.total_parameters; }

  // All parameter storage in checkpoint order.
  std::vector<std::span<Real>> parameter_blocks();
  std::vector<std::span<const Real>> parameter_blocks() const;

  // Populated by network_forward, consumed by network_backward.
  const std::optional<ForwardTrace>& trace() const noexcept { return trace_; }
  void clear_trace() noexcept { trace_.reset(); }

 private:
  friend Volume network_forward(Network& net, const Volume& input);

  ArchSpec arch_;
  PlanReport plan_;
  std::vector<LayerParams> layers_;
  std::optional<ForwardTrace> trace_;
};

// Weights uniform on [-scale * sqrt(1 / fan_in), +scale * sqrt(1 / fan_in)],
// drawn from SplitMix64(seed) in checkpoint order; biases zero.
Network init_network(const ArchSpec& arch, std::uint64_t seed, Real scale);

// Stateless forward; fills `trace` when given.
Volume forward(const Network& net, const Volume& input, ForwardTrace* trace = nullptr);
// Runs layers [first, end) starting from `layer_input`, the input of layer `first`.
Volume forward_from(const Network& net, std::size_t first, const Volume& layer_input);

Volume network_forward(Network& net, const Volume& input);
std::vector<LayerGradients> network_backward(Network& net, const Volume& loss_grad);
std::vector<LayerGradients> backward(const Network& net, const ForwardTrace& trace,
                                     const Volume& loss_grad);

std::vector<std::span<Real>> gradient_blocks(std::vector<LayerGradients>& grads);
std::vector<std::span<const Real>> gradient_blocks(const std::vector<LayerGradients>& grads);

// into += from; both must come from the same network.
void add_gradients(std::vector<LayerGradients>& into, const std::vector<LayerGradients>& from);
void scale_gradients(std::vector<LayerGradients>& grads, Real factor);

// p <- p - learning_rate * g for every parameter.
void sgd_step(Network& net, const std::vector<LayerGradients>& grads, Real learning_rate);

// Smallest distance of any ReLU input from 0 and of any max-pool window maximum
// from its runner-up (windows of ReLU-clamped zeros excepted). Finite-difference checks are meaningful when this exceeds
// the perturbation's effect.
Real nondegeneracy_margin(const Network& net, const Volume& input);

}  // namespace cnn
