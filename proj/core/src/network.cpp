#include "cnn/network.hpp"

#include <cmath>
#include <limits>

#include "cnn/rng.hpp"

namespace cnn {

namespace {

template <typename Blocks>
void append(Blocks& out, Blocks&& more) {
  out.insert(out.end(), more.begin(), more.end());
}

Volume apply_layer(const LayerSpec& spec, const LayerParams& params, const Volume& in,
                   std::vector<std::size_t>* switches) {
  switch (kind_of(spec)) {
    case LayerKind::Input: return in;
    case LayerKind::Conv: return conv_forward(in, std::get<ConvParams>(params));
    case LayerKind::Relu: return relu_forward(in);
    case LayerKind::Pool: {
      auto result = pool_forward(in, std::get<PoolLayer>(spec).pool);
      if (switches) *switches = std::move(result.switches);
      return std::move(result.output);
    }
    case LayerKind::Fc: return fc_forward(in, std::get<FcParams>(params));
  }
  throw Error(ErrorKind::State, "unknown layer kind");
}

}  // namespace

Network::Network(ArchSpec arch) : arch_(std::move(arch)), plan_(cnn::plan(arch_)) {
  layers_.resize(arch_.layers.size());
  for (std::size_t i = 1; i < arch_.layers.size(); ++i) {
    const Shape& in = plan_.layers[i - 1].output;
    if (const auto* conv = std::get_if<ConvLayer>(&arch_.layers[i])) {
      layers_[i] = ConvParams(in.depth, *conv);
    } else if (const auto* fc = std::get_if<FcLayer>(&arch_.layers[i])) {
      layers_[i] = FcParams(static_cast<int>(in.size()), fc->outputs);
    }
  }
}

std::vector<std::span<Real>> Network::parameter_blocks() {
  std::vector<std::span<Real>> out;
  for (auto& layer : layers_) {
    if (auto* c = std::get_if<ConvParams>(&layer)) append(out, c->blocks());
    if (auto* f = std::get_if<FcParams>(&layer)) append(out, f->blocks());
  }
  return out;
}

std::vector<std::span<const Real>> Network::parameter_blocks() const {
  std::vector<std::span<const Real>> out;
  for (const auto& layer : layers_) {
    if (const auto* c = std::get_if<ConvParams>(&layer)) append(out, c->blocks());
    if (const auto* f = std::get_if<FcParams>(&layer)) append(out, f->blocks());
  }
  return out;
}

Network init_network(const ArchSpec& arch, std::uint64_t seed, Real scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::Precondition, "init scale must be a finite non-negative number");
  }
  Network net(arch);
  SplitMix64 rng(seed);
  const auto draw = [&rng](std::span<Real> block, std::size_t fan_in, Real s) {
    const Real limit = s * std::sqrt(1.0 / static_cast<Real>(fan_in));
    for (auto& w : block) w = rng.uniform(-limit, limit);
  };
  for (auto& layer : net.layers()) {
    if (auto* c = std::get_if<ConvParams>(&layer)) {
      const auto fan_in = static_cast<std::size_t>(c->field * c->field * c->in_depth());
      for (auto& k : c->kernels) draw(k.data(), fan_in, scale);
    } else if (auto* f = std::get_if<FcParams>(&layer)) {
      draw(f->weights, static_cast<std::size_t>(f->inputs), scale);
    }
  }
  return net;
}

Volume forward(const Network& net, const Volume& input, ForwardTrace* trace) {
  const Shape& expected = net.arch().input_shape();
  if (input.shape() != expected) {
    throw Error(ErrorKind::Shape, "network input must be " + to_string(expected) + ", got " +
                                      to_string(input.shape()));
  }
  const auto& specs = net.arch().layers;
  if (trace) {
    trace->activations.assign(1, input);
    trace->switches.assign(specs.size(), {});
    for (std::size_t i = 1; i < specs.size(); ++i) {
      trace->activations.push_back(
          apply_layer(specs[i], net.layers()[i], trace->activations.back(), &trace->switches[i]));
    }
    return trace->activations.back();
  }
  return forward_from(net, 1, input);
}

Volume forward_from(const Network& net, std::size_t first, const Volume& layer_input) {
  const auto& specs = net.arch().layers;
  Volume current = layer_input;
  for (std::size_t i = std::max<std::size_t>(first, 1); i < specs.size(); ++i) {
    current = apply_layer(specs[i], net.layers()[i], current, nullptr);
  }
  return current;
}

Volume network_forward(Network& net, const Volume& input) {
  ForwardTrace trace;
  auto out = forward(net, input, &trace);
  net.trace_ = std::move(trace);
  return out;
}

std::vector<LayerGradients> backward(const Network& net, const ForwardTrace& trace,
                                     const Volume& loss_grad) {
  const auto& specs = net.arch().layers;
  if (trace.activations.size() != specs.size()) {
    throw Error(ErrorKind::State, "forward trace does not match the network");
  }
  if (loss_grad.shape() != trace.activations.back().shape()) {
    throw Error(ErrorKind::Shape, "loss gradient must be " +
                                      to_string(trace.activations.back().shape()) + ", got " +
                                      to_string(loss_grad.shape()));
  }
  std::vector<LayerGradients> grads(specs.size());
  Volume upstream = loss_grad;
  for (std::size_t i = specs.size() - 1; i >= 1; --i) {
    const Volume& in = trace.activations[i - 1];
    switch (kind_of(specs[i])) {
      case LayerKind::Conv: {
        auto g = conv_backward(in, std::get<ConvParams>(net.layers()[i]), upstream);
        upstream = g.input;
        grads[i] = std::move(g);
        break;
      }
      case LayerKind::Fc: {
        auto g = fc_backward(in, std::get<FcParams>(net.layers()[i]), upstream);
        upstream = g.input;
        grads[i] = std::move(g);
        break;
      }
      case LayerKind::Relu: upstream = relu_backward(in, upstream); break;
      case LayerKind::Pool:
        upstream = pool_backward(in, std::get<PoolLayer>(specs[i]).pool, trace.switches[i], upstream);
        break;
      case LayerKind::Input: break;
    }
  }
  return grads;
}

std::vector<LayerGradients> network_backward(Network& net, const Volume& loss_grad) {
  if (!net.trace()) throw Error(ErrorKind::State, "backward called before any forward pass");
  return backward(net, *net.trace(), loss_grad);
}

std::vector<std::span<Real>> gradient_blocks(std::vector<LayerGradients>& grads) {
  std::vector<std::span<Real>> out;
  for (auto& g : grads) {
    if (auto* c = std::get_if<ConvGradients>(&g)) append(out, c->blocks());
    if (auto* f = std::get_if<FcGradients>(&g)) append(out, f->blocks());
  }
  return out;
}

std::vector<std::span<const Real>> gradient_blocks(const std::vector<LayerGradients>& grads) {
  std::vector<std::span<const Real>> out;
  for (const auto& g : grads) {
    if (const auto* c = std::get_if<ConvGradients>(&g)) append(out, c->blocks());
    if (const auto* f = std::get_if<FcGradients>(&g)) append(out, f->blocks());
  }
  return out;
}

namespace {

template <typename Dst, typename Src>
void check_congruent(const Dst& dst, const Src& src) {
  if (dst.size() != src.size()) {
    throw Error(ErrorKind::Shape, "gradient block count " + std::to_string(src.size()) +
                                      " does not match " + std::to_string(dst.size()));
  }
  for (std::size_t b = 0; b < dst.size(); ++b) {
    if (dst[b].size() != src[b].size()) {
      throw Error(ErrorKind::Shape, "gradient block " + std::to_string(b) + " has " +
                                        std::to_string(src[b].size()) + " values, expected " +
                                        std::to_string(dst[b].size()));
    }
  }
}

}  // namespace

void add_gradients(std::vector<LayerGradients>& into, const std::vector<LayerGradients>& from) {
  auto dst = gradient_blocks(into);
  const auto src = gradient_blocks(from);
  check_congruent(dst, src);
  for (std::size_t b = 0; b < dst.size(); ++b) {
    for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
  }
}

void scale_gradients(std::vector<LayerGradients>& grads, Real factor) {
  for (auto block : gradient_blocks(grads)) {
    for (auto& g : block) g *= factor;
  }
}

void sgd_step(Network& net, const std::vector<LayerGradients>& grads, Real learning_rate) {
  auto params = net.parameter_blocks();
  const auto src = gradient_blocks(grads);
  check_congruent(params, src);
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= learning_rate * src[b][i];
  }
}

Real nondegeneracy_margin(const Network& net, const Volume& input) {
  ForwardTrace trace;
  forward(net, input, &trace);
  Real margin = std::numeric_limits<Real>::infinity();
  const auto& specs = net.arch().layers;
  for (std::size_t i = 1; i < specs.size(); ++i) {
    const Volume& in = trace.activations[i - 1];
    if (kind_of(specs[i]) == LayerKind::Relu) {
      for (const Real x : in.data()) margin = std::min(margin, std::abs(x));
    } else if (const auto* pool = std::get_if<PoolLayer>(&specs[i]);
               pool && pool->pool.kind == PoolKind::Max) {
      const auto& s = pool->pool;
      const Shape out = trace.activations[i].shape();
      for (int oy = 0; oy < out.height; ++oy) {
        for (int ox = 0; ox < out.width; ++ox) {
          for (int d = 0; d < out.depth; ++d) {
            Real best = -std::numeric_limits<Real>::infinity();
            Real second = best;
            for (int ky = 0; ky < s.window; ++ky) {
              for (int kx = 0; kx < s.window; ++kx) {
                const Real x = in(ox * s.stride + kx, oy * s.stride + ky, d);
                if (x > best) {
                  second = best;
                  best = x;
                } else if (x > second) {
                  second = x;
                }
              }
            }
            // A window whose maximum is a ReLU-clamped zero stays clamped under small perturbations.
            const bool clamped = best == 0.0 && kind_of(specs[i - 1]) == LayerKind::Relu;
            if (s.window > 1 && !clamped) margin = std::min(margin, best - second);
          }
        }
      }
    }
  }
  return margin;
}

}  // namespace cnn
