#include "cnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cnn/planner.hpp"

namespace cnn {

namespace {

[[noreturn]] void shape_error(const char* where, const Shape& expected, const Shape& got) {
  std::ostringstream os;
  os << where << ": expected " << to_string(expected) << ", got " << to_string(got);
  throw Error(ErrorKind::Shape, os.str());
}

template <typename Span>
std::vector<Span> conv_blocks(auto& kernels, auto& biases) {
  std::vector<Span> out;
  out.reserve(kernels.size() + 1);
  for (auto& k : kernels) out.emplace_back(k.data());
  out.emplace_back(biases);
  return out;
}

template <typename Span>
std::vector<Span> fc_blocks(auto& weights, auto& biases) {
  return {Span(weights), Span(biases)};
}

struct ConvGeometry {
  int out_h;
  int out_w;
  int columns;  // R * R * D_in

  std::size_t positions() const {
    return static_cast<std::size_t>(out_h) * static_cast<std::size_t>(out_w);
  }
};

ConvGeometry conv_geometry(const Volume& input, const ConvParams& p) {
  if (p.kernels.empty()) throw Error(ErrorKind::Shape, "conv layer has no kernels");
  if (input.depth() != p.in_depth()) {
    std::ostringstream os;
    os << "conv input depth " << input.depth() << " does not match kernel depth " << p.in_depth();
    throw Error(ErrorKind::Shape, os.str());
  }
  return {output_shape(input.height(), p.field, p.pad, p.stride),
          output_shape(input.width(), p.field, p.pad, p.stride),
          p.field * p.field * input.depth()};
}

// Row p of the result holds the zero-padded receptive field of output position
// p, laid out (ky, kx, d) to match a kernel Volume's flat storage.
std::vector<Real> lower_patches(const Volume& input, const ConvParams& p, const ConvGeometry& g) {
  const int depth = input.depth();
  std::vector<Real> patches(g.positions() * static_cast<std::size_t>(g.columns), 0.0);
  const auto src = input.data();
  std::size_t row = 0;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox, ++row) {
      Real* dst = patches.data() + row * static_cast<std::size_t>(g.columns);
      for (int ky = 0; ky < p.field; ++ky) {
        const int iy = oy * p.stride - p.pad + ky;
        if (iy < 0 || iy >= input.height()) continue;
        for (int kx = 0; kx < p.field; ++kx) {
          const int ix = ox * p.stride - p.pad + kx;
          if (ix < 0 || ix >= input.width()) continue;
          std::copy_n(src.data() + input.index(ix, iy, 0), depth,
                      dst + (ky * p.field + kx) * depth);
        }
      }
    }
  }
  return patches;
}

}  // namespace

ConvParams::ConvParams(int in_depth, const ConvLayer& layer)
    : field(layer.field), stride(layer.stride), pad(layer.pad) {
  if (in_depth < 1 || layer.field < 1 || layer.kernels < 1 || layer.stride < 1 || layer.pad < 0) {
    throw Error(ErrorKind::Dimension, "invalid conv hyperparameters");
  }
  kernels.assign(static_cast<std::size_t>(layer.kernels), Volume(layer.field, layer.field, in_depth));
  biases.assign(static_cast<std::size_t>(layer.kernels), 0.0);
}

std::size_t ConvParams::parameter_count() const noexcept {
  std::size_t n = biases.size();
  for (const auto& k : kernels) n += k.size();
  return n;
}

std::vector<std::span<Real>> ConvParams::blocks() {
  return conv_blocks<std::span<Real>>(kernels, biases);
}
std::vector<std::span<const Real>> ConvParams::blocks() const {
  return conv_blocks<std::span<const Real>>(kernels, biases);
}

FcParams::FcParams(int in, int out) : inputs(in), outputs(out) {
  if (in < 1 || out < 1) throw Error(ErrorKind::Dimension, "fc sizes must be positive");
  weights.assign(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0.0);
  biases.assign(static_cast<std::size_t>(out), 0.0);
}

std::vector<std::span<Real>> FcParams::blocks() {
  return fc_blocks<std::span<Real>>(weights, biases);
}
std::vector<std::span<const Real>> FcParams::blocks() const {
  return fc_blocks<std::span<const Real>>(weights, biases);
}

ConvGradients::ConvGradients(const ConvParams& params, const Shape& input_shape)
    : kernels(params.kernels.size(), params.kernels.empty() ? Volume() : Volume(params.kernels[0].shape())),
      biases(params.biases.size(), 0.0),
      input(input_shape) {
  if (params.biases.size() != params.kernels.size()) {
    throw Error(ErrorKind::Shape, "conv bias count differs from kernel count");
  }
  for (const auto& k : params.kernels) {
    if (k.shape() != Shape{params.field, params.field, params.in_depth()}) {
      shape_error("conv kernel", Shape{params.field, params.field, params.in_depth()}, k.shape());
    }
  }
  if (input_shape.depth != params.in_depth()) {
    shape_error("conv gradient input", Shape{input_shape.height, input_shape.width, params.in_depth()},
                input_shape);
  }
}

std::vector<std::span<Real>> ConvGradients::blocks() {
  return conv_blocks<std::span<Real>>(kernels, biases);
}
std::vector<std::span<const Real>> ConvGradients::blocks() const {
  return conv_blocks<std::span<const Real>>(kernels, biases);
}

FcGradients::FcGradients(const FcParams& params, const Shape& input_shape)
    : weights(params.weights.size(), 0.0), biases(params.biases.size(), 0.0), input(input_shape) {
  if (params.weights.size() !=
          static_cast<std::size_t>(params.inputs) * static_cast<std::size_t>(params.outputs) ||
      params.biases.size() != static_cast<std::size_t>(params.outputs)) {
    throw Error(ErrorKind::Shape, "fc parameter storage does not match its declared sizes");
  }
  if (input_shape.size() != static_cast<std::size_t>(params.inputs)) {
    throw Error(ErrorKind::Shape, "fc gradient input shape " + to_string(input_shape) +
                                      " does not hold " + std::to_string(params.inputs) + " values");
  }
}

std::vector<std::span<Real>> FcGradients::blocks() {
  return fc_blocks<std::span<Real>>(weights, biases);
}
std::vector<std::span<const Real>> FcGradients::blocks() const {
  return fc_blocks<std::span<const Real>>(weights, biases);
}

Volume conv_forward(const Volume& input, const ConvParams& params) {
  const auto g = conv_geometry(input, params);
  const auto patches = lower_patches(input, params, g);
  const int kernel_count = params.kernel_count();
  Volume out(g.out_h, g.out_w, kernel_count);
  auto dst = out.data();
  const auto cols = static_cast<std::size_t>(g.columns);
  for (std::size_t p = 0; p < g.positions(); ++p) {
    const Real* patch = patches.data() + p * cols;
    for (int k = 0; k < kernel_count; ++k) {
      const Real* w = params.kernels[static_cast<std::size_t>(k)].data().data();
      Real acc = params.biases[static_cast<std::size_t>(k)];
      for (std::size_t c = 0; c < cols; ++c) acc += patch[c] * w[c];
      dst[p * static_cast<std::size_t>(kernel_count) + static_cast<std::size_t>(k)] = acc;
    }
  }
  return out;
}

ConvGradients conv_backward(const Volume& input, const ConvParams& params, const Volume& upstream) {
  const auto g = conv_geometry(input, params);
  const int kernel_count = params.kernel_count();
  const Shape expected{g.out_h, g.out_w, kernel_count};
  if (upstream.shape() != expected) shape_error("conv upstream", expected, upstream.shape());

  ConvGradients grads(params, input.shape());
  const auto patches = lower_patches(input, params, g);
  const auto cols = static_cast<std::size_t>(g.columns);
  const auto up = upstream.data();
  std::vector<Real> patch_grad(cols);
  const int depth = input.depth();
  auto input_grad = grads.input.data();

  std::size_t p = 0;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox, ++p) {
      const Real* patch = patches.data() + p * cols;
      std::fill(patch_grad.begin(), patch_grad.end(), 0.0);
      for (int k = 0; k < kernel_count; ++k) {
        const Real u = up[p * static_cast<std::size_t>(kernel_count) + static_cast<std::size_t>(k)];
        if (u == 0.0) continue;
        const auto ks = static_cast<std::size_t>(k);
        grads.biases[ks] += u;
        Real* wg = grads.kernels[ks].data().data();
        const Real* w = params.kernels[ks].data().data();
        for (std::size_t c = 0; c < cols; ++c) {
          wg[c] += u * patch[c];
          patch_grad[c] += u * w[c];
        }
      }
      // Scatter back into the input, dropping contributions to padding cells.
      for (int ky = 0; ky < params.field; ++ky) {
        const int iy = oy * params.stride - params.pad + ky;
        if (iy < 0 || iy >= input.height()) continue;
        for (int kx = 0; kx < params.field; ++kx) {
          const int ix = ox * params.stride - params.pad + kx;
          if (ix < 0 || ix >= input.width()) continue;
          Real* dst = input_grad.data() + input.index(ix, iy, 0);
          const Real* src = patch_grad.data() + (ky * params.field + kx) * depth;
          for (int d = 0; d < depth; ++d) dst[d] += src[d];
        }
      }
    }
  }
  return grads;
}

Volume relu_forward(const Volume& input) {
  return elementwise_map(input, [](Real x) { return x > 0.0 ? x : 0.0; });
}

Volume relu_backward(const Volume& input, const Volume& upstream) {
  if (input.shape() != upstream.shape()) shape_error("relu upstream", input.shape(), upstream.shape());
  Volume grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) grad[i] = input[i] > 0.0 ? upstream[i] : 0.0;
  return grad;
}

PoolResult pool_forward(const Volume& input, const PoolSpec& spec) {
  if (spec.window < 1 || spec.stride < 1) {
    throw Error(ErrorKind::Geometry, "pool window and stride must be positive");
  }
  const int out_h = output_shape(input.height(), spec.window, 0, spec.stride);
  const int out_w = output_shape(input.width(), spec.window, 0, spec.stride);
  const int depth = input.depth();
  PoolResult result{Volume(out_h, out_w, depth), {}};
  if (spec.kind == PoolKind::Max) result.switches.resize(result.output.size());
  const Real area = static_cast<Real>(spec.window) * static_cast<Real>(spec.window);

  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      for (int d = 0; d < depth; ++d) {
        const std::size_t out_index = result.output.index(ox, oy, d);
        Real acc = 0.0;
        std::size_t best_index = 0;
        Real best = 0.0;
        bool first = true;
        for (int ky = 0; ky < spec.window; ++ky) {
          for (int kx = 0; kx < spec.window; ++kx) {
            const std::size_t i = input.index(ox * spec.stride + kx, oy * spec.stride + ky, d);
            const Real x = input[i];
            switch (spec.kind) {
              case PoolKind::Max:
                if (first || x > best) {
                  best = x;
                  best_index = i;
                  first = false;
                }
                break;
              case PoolKind::Average: acc += x; break;
              case PoolKind::L2Norm: acc += x * x; break;
              case PoolKind::L1Norm: acc += std::abs(x); break;
            }
          }
        }
        switch (spec.kind) {
          case PoolKind::Max:
            result.output[out_index] = best;
            result.switches[out_index] = best_index;
            break;
          case PoolKind::Average: result.output[out_index] = acc / area; break;
          case PoolKind::L2Norm: result.output[out_index] = std::sqrt(acc); break;
          case PoolKind::L1Norm: result.output[out_index] = acc; break;
        }
      }
    }
  }
  return result;
}

Volume pool_backward(const Volume& input, const PoolSpec& spec,
                     std::span<const std::size_t> switches, const Volume& upstream) {
  const Shape expected{output_shape(input.height(), spec.window, 0, spec.stride),
                       output_shape(input.width(), spec.window, 0, spec.stride), input.depth()};
  if (upstream.shape() != expected) shape_error("pool upstream", expected, upstream.shape());

  Volume grad(input.shape());
  if (spec.kind == PoolKind::Max) {
    if (switches.size() != upstream.size()) {
      throw Error(ErrorKind::Shape, "max-pool switch map does not match the upstream gradient");
    }
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      if (switches[i] >= grad.size()) throw Error(ErrorKind::Index, "switch outside pool input");
      grad[switches[i]] += upstream[i];
    }
    return grad;
  }

  const Real area = static_cast<Real>(spec.window) * static_cast<Real>(spec.window);
  for (int oy = 0; oy < expected.height; ++oy) {
    for (int ox = 0; ox < expected.width; ++ox) {
      for (int d = 0; d < expected.depth; ++d) {
        const Real u = upstream(ox, oy, d);
        Real norm = 0.0;
        if (spec.kind == PoolKind::L2Norm) {
          for (int ky = 0; ky < spec.window; ++ky) {
            for (int kx = 0; kx < spec.window; ++kx) {
              const Real x = input(ox * spec.stride + kx, oy * spec.stride + ky, d);
              norm += x * x;
            }
          }
          norm = std::sqrt(norm);
        }
        for (int ky = 0; ky < spec.window; ++ky) {
          for (int kx = 0; kx < spec.window; ++kx) {
            const std::size_t i = input.index(ox * spec.stride + kx, oy * spec.stride + ky, d);
            const Real x = input[i];
            switch (spec.kind) {
              case PoolKind::Average: grad[i] += u / area; break;
              case PoolKind::L2Norm:
                if (norm > 0.0) grad[i] += u * x / norm;
                break;
              case PoolKind::L1Norm: grad[i] += u * static_cast<Real>((x > 0.0) - (x < 0.0)); break;
              case PoolKind::Max: break;
            }
          }
        }
      }
    }
  }
  return grad;
}

Volume fc_forward(const Volume& input, const FcParams& params) {
  if (input.size() != static_cast<std::size_t>(params.inputs)) {
    std::ostringstream os;
    os << "fc expects " << params.inputs << " inputs, got " << to_string(input.shape());
    throw Error(ErrorKind::Shape, os.str());
  }
  Volume out(1, 1, params.outputs);
  const auto x = input.data();
  const auto n_in = static_cast<std::size_t>(params.inputs);
  for (int j = 0; j < params.outputs; ++j) {
    const Real* w = params.weights.data() + static_cast<std::size_t>(j) * n_in;
    Real acc = params.biases[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

FcGradients fc_backward(const Volume& input, const FcParams& params, const Volume& upstream) {
  const Shape expected{1, 1, params.outputs};
  if (upstream.shape() != expected) shape_error("fc upstream", expected, upstream.shape());
  FcGradients grads(params, input.shape());
  const auto x = input.data();
  const auto n_in = static_cast<std::size_t>(params.inputs);
  auto dx = grads.input.data();
  for (int j = 0; j < params.outputs; ++j) {
    const auto js = static_cast<std::size_t>(j);
    const Real u = upstream[js];
    grads.biases[js] = u;
    if (u == 0.0) continue;
    Real* wg = grads.weights.data() + js * n_in;
    const Real* w = params.weights.data() + js * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      wg[i] = u * x[i];
      dx[i] += w[i] * u;
    }
  }
  return grads;
}

LossResult softmax_cross_entropy(const Volume& scores, int label) {
  if (scores.height() != 1 || scores.width() != 1) {
    throw Error(ErrorKind::Shape, "class scores must be 1x1xn, got " + to_string(scores.shape()));
  }
  const int n = scores.depth();
  if (label < 0 || label >= n) {
    throw Error(ErrorKind::Label,
                "label " + std::to_string(label) + " outside [0, " + std::to_string(n) + ")");
  }
  const auto s = scores.data();
  const Real top = *std::max_element(s.begin(), s.end());
  Real sum = 0.0;
  Volume grad(1, 1, n);
  for (int i = 0; i < n; ++i) {
    const auto is = static_cast<std::size_t>(i);
    grad[is] = std::exp(s[is] - top);
    sum += grad[is];
  }
  const auto ls = static_cast<std::size_t>(label);
  const Real loss = std::log(sum) - (s[ls] - top);
  for (auto& g : grad.data()) g /= sum;
  grad[ls] -= 1.0;
  if (!std::isfinite(loss)) throw Error(ErrorKind::Numeric, "non-finite cross-entropy loss");
  return {loss, std::move(grad)};
}

}  // namespace cnn
