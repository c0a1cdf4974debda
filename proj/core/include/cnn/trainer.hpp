#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "cnn/dataset.hpp"
#include "cnn/network.hpp"

namespace cnn {

struct TrainConfig {
  Real learning_rate = 0.01;
  std::size_t batch_size = 32;
  int epochs = 5;
  std::uint64_t seed = 0;
  // Init limit is init_scale * sqrt(1 / fan_in).
  Real init_scale = 2.449489742783178;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch;
  Real mean_loss;
  Real accuracy;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

using ProgressSink = std::function<void(const EpochRecord&)>;

// Minibatch SGD with batch-averaged gradients. Epoch e shuffles with the e-th
// draw of SplitMix64(cfg.seed), so a run is a pure function of its inputs.
// Loss and accuracy are measured on the forward passes used for the updates.
std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg,
                               const ProgressSink& progress = {});

// Index of the largest score; ties go to the lowest index.
int predict(const Volume& scores);

Real evaluate(const Network& net, const Dataset& data);

// Mean softmax cross-entropy over one batch, plus averaged gradients.
struct BatchResult {
  Real mean_loss;
  std::size_t correct;
  std::vector<LayerGradients> grads;
};

BatchResult batch_gradients(const Network& net, const std::vector<std::reference_wrapper<const Volume>>& inputs,
                            const std::vector<int>& labels);

struct GradCheckResult {
  Real max_relative_error = 0.0;
  std::size_t parameters = 0;
  std::size_t worst_block = 0;
  std::size_t worst_index = 0;
  Real worst_analytic = 0.0;
  Real worst_numeric = 0.0;
};

// Central differences (L(p + eps) - L(p - eps)) / 2eps against backprop for
// every parameter, with relative error |a - n| / max(|a|, |n|, 1e-8).
// Parameters are restored bit-exactly afterwards.
GradCheckResult grad_check_detailed(Network& net, const Volume& input, int label, Real epsilon);
Real grad_check(Network& net, const Volume& input, int label, Real epsilon);

}  // namespace cnn
