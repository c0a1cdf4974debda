#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cnn/arch.hpp"

namespace cnn {

// Number of placements of a window of size `field` over an axis of length
// `input` padded by `pad` on both sides, stepping by `stride`:
//   (input - field + 2 * pad) / stride + 1
// Throws ErrorKind::Geometry when input + 2 * pad < field and
// ErrorKind::StrideFit when the division is not exact.
int output_shape(int input, int field, int pad, int stride);

Shape layer_output_shape(const LayerSpec& layer, const Shape& input);
std::size_t layer_parameter_count(const LayerSpec& layer, const Shape& input);

struct LayerPlan {
  LayerKind kind;
  Shape output;
  std::size_t parameters = 0;
  std::size_t activations = 0;
};

struct PlanReport {
  std::string arch_name;
  std::vector<LayerPlan> layers;
  std::size_t total_parameters = 0;
  std::size_t total_activations = 0;
  std::size_t conv_activations = 0;  // elements produced by conv layers alone
  int bytes_per_element = 4;
  std::size_t activation_bytes = 0;
};

// Propagates shapes through `arch`. Fit failures are rethrown with the
// offending layer index prepended to the message; the error kind is kept.
PlanReport plan(const ArchSpec& arch, int bytes_per_element = 4);

struct FitFailure {
  int layer;
  ErrorKind kind;
  std::string message;
};

// Like plan(), but stops at the first layer that does not fit instead of
// throwing; `report.layers` then covers only the layers before it.
struct PartialPlan {
  PlanReport report;
  std::optional<FitFailure> failure;
};

PartialPlan plan_partial(const ArchSpec& arch, int bytes_per_element = 4);

struct ConvStep {
  int field;
  int stride;
};

// Side length of the input region seen by one unit at the top of a conv stack.
int effective_receptive_field(std::span<const ConvStep> convs);

enum class Severity { Error, Warning, Hint };
std::string_view to_string(Severity severity) noexcept;

struct LintDiagnostic {
  Severity severity;
  std::string rule;
  int layer;
  std::string message;

  friend bool operator==(const LintDiagnostic&, const LintDiagnostic&) = default;
};

struct LintRule {
  std::string_view id;
  Severity severity;
  std::string_view summary;
};

std::span<const LintRule> lint_rulebook();

std::vector<LintDiagnostic> lint(const ArchSpec& arch);

bool has_errors(std::span<const LintDiagnostic> diagnostics);

// "severity rule layer message", one record per line.
std::string format_diagnostics(std::span<const LintDiagnostic> diagnostics);
// Human-readable per-layer table followed by totals.
std::string format_plan_table(const PlanReport& report);
// JSON document mirroring PlanReport plus the diagnostic list.
std::string plan_to_json(const PlanReport& report, std::span<const LintDiagnostic> diagnostics);

}  // namespace cnn
