#include "cnn/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "cnn/rng.hpp"

namespace cnn {

namespace {

// Cross-entropy in extended precision. Finite differences subtract two nearly
// equal losses, and rounding each one to double would swamp small gradients.
long double cross_entropy_extended(const Volume& scores, int label) {
  const auto s = scores.data();
  const long double top = *std::max_element(s.begin(), s.end());
  long double sum = 0.0L;
  for (const Real x : s) sum += std::exp(static_cast<long double>(x) - top);
  return std::log(sum) - (static_cast<long double>(s[static_cast<std::size_t>(label)]) - top);
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorKind::Precondition, "learning rate must be positive");
  }
  if (cfg.batch_size == 0) throw Error(ErrorKind::Precondition, "batch size must be positive");
  if (cfg.epochs < 0) throw Error(ErrorKind::Precondition, "epoch count must be non-negative");
  if (!(cfg.init_scale > 0.0)) throw Error(ErrorKind::Precondition, "init scale must be positive");
}

int predict(const Volume& scores) {
  const auto s = scores.data();
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

BatchResult batch_gradients(const Network& net,
                            const std::vector<std::reference_wrapper<const Volume>>& inputs,
                            const std::vector<int>& labels) {
  if (inputs.empty() || inputs.size() != labels.size()) {
    throw Error(ErrorKind::Pairing, "batch needs matching, non-empty inputs and labels");
  }
  BatchResult result{0.0, 0, {}};
  ForwardTrace trace;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Volume scores = forward(net, inputs[i].get(), &trace);
    const auto loss = softmax_cross_entropy(scores, labels[i]);
    result.mean_loss += loss.loss;
    if (predict(scores) == labels[i]) ++result.correct;
    auto grads = backward(net, trace, loss.grad);
    if (i == 0) {
      result.grads = std::move(grads);
    } else {
      add_gradients(result.grads, grads);
    }
  }
  const Real inv = 1.0 / static_cast<Real>(inputs.size());
  scale_gradients(result.grads, inv);
  result.mean_loss *= inv;
  return result;
}

std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg,
                               const ProgressSink& progress) {
  validate(cfg);
  if (cfg.epochs == 0) return {};
  if (data.empty()) throw Error(ErrorKind::Precondition, "cannot train on an empty dataset");
  check_dataset(data, net.plan().layers.back().output.depth);

  std::vector<EpochRecord> log;
  SplitMix64 epoch_seeds(cfg.seed);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = batches(data, cfg.batch_size, epoch_seeds.next());
    Real loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); ++b) {
      try {
        auto step = batch_gradients(net, order[b].inputs, order[b].labels);
        loss_sum += step.mean_loss * static_cast<Real>(order[b].inputs.size());
        correct += step.correct;
        sgd_step(net, step.grads, cfg.learning_rate);
      } catch (const Error& e) {
        throw Error(e.kind(), "epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                                  ": " + e.what());
      }
    }
    const auto n = static_cast<Real>(data.size());
    log.push_back({epoch, loss_sum / n, static_cast<Real>(correct) / n});
    if (progress) progress(log.back());
  }
  net.clear_trace();
  return log;
}

Real evaluate(const Network& net, const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::Precondition, "cannot evaluate on an empty dataset");
  if (data.images.size() != data.labels.size()) {
    throw Error(ErrorKind::Pairing, "images and labels differ in length");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(forward(net, data.images[i])) == data.labels[i]) ++correct;
  }
  return static_cast<Real>(correct) / static_cast<Real>(data.size());
}

GradCheckResult grad_check_detailed(Network& net, const Volume& input, int label, Real epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::Precondition, "finite-difference epsilon must be positive");
  }
  ForwardTrace trace;
  const auto base = softmax_cross_entropy(forward(net, input, &trace), label);
  const auto analytic = backward(net, trace, base.grad);

  const auto loss_from = [&](std::size_t layer) {
    const long double loss = cross_entropy_extended(forward_from(net, layer, trace.activations[layer - 1]), label);
    if (!std::isfinite(loss)) throw Error(ErrorKind::Numeric, "non-finite loss during gradient check");
    return loss;
  };

  GradCheckResult result;
  std::size_t block_offset = 0;
  for (std::size_t layer = 1; layer < net.layers().size(); ++layer) {
    std::vector<std::span<Real>> params;
    std::vector<std::span<const Real>> grads;
    if (auto* c = std::get_if<ConvParams>(&net.layers()[layer])) {
      params = c->blocks();
      grads = std::get<ConvGradients>(analytic[layer]).blocks();
    } else if (auto* f = std::get_if<FcParams>(&net.layers()[layer])) {
      params = f->blocks();
      grads = std::get<FcGradients>(analytic[layer]).blocks();
    } else {
      continue;
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        Real& p = params[b][i];
        const Real saved = p;
        p = saved + epsilon;
        const long double plus = loss_from(layer);
        p = saved - epsilon;
        const long double minus = loss_from(layer);
        p = saved;

        const auto numeric = static_cast<Real>((plus - minus) / (2.0L * epsilon));
        const Real a = grads[b][i];
        const Real denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        const Real rel = std::abs(a - numeric) / denom;
        ++result.parameters;
        if (rel > result.max_relative_error) {
          result.max_relative_error = rel;
          result.worst_block = block_offset + b;
          result.worst_index = i;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
    block_offset += params.size();
  }
  return result;
}

Real grad_check(Network& net, const Volume& input, int label, Real epsilon) {
  return grad_check_detailed(net, input, label, epsilon).max_relative_error;
}

}  // namespace cnn
