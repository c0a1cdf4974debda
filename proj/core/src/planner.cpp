#include "cnn/planner.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace cnn {

int output_shape(int input, int field, int pad, int stride) {
  if (input < 1 || field < 1 || stride < 1 || pad < 0) {
    throw Error(ErrorKind::Geometry, "sizing needs V, R, S >= 1 and Z >= 0");
  }
  const int span = input - field + 2 * pad;
  if (span < 0) {
    std::ostringstream os;
    os << "window " << field << " does not fit input " << input << " with padding " << pad;
    throw Error(ErrorKind::Geometry, os.str());
  }
  if (span % stride != 0) {
    std::ostringstream os;
    os << "stride " << stride << " does not fit: (" << input << " - " << field << " + 2*" << pad
       << ") / " << stride << " is not a whole number";
    throw Error(ErrorKind::StrideFit, os.str());
  }
  return span / stride + 1;
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& input) {
  return std::visit(
      [&input](const auto& l) -> Shape {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, InputLayer>) {
          return l.shape;
        } else if constexpr (std::is_same_v<T, ConvLayer>) {
          return Shape{output_shape(input.height, l.field, l.pad, l.stride),
                       output_shape(input.width, l.field, l.pad, l.stride), l.kernels};
        } else if constexpr (std::is_same_v<T, ReluLayer>) {
          return input;
        } else if constexpr (std::is_same_v<T, PoolLayer>) {
          return Shape{output_shape(input.height, l.pool.window, 0, l.pool.stride),
                       output_shape(input.width, l.pool.window, 0, l.pool.stride), input.depth};
        } else {
          return Shape{1, 1, l.outputs};
        }
      },
      layer);
}

std::size_t layer_parameter_count(const LayerSpec& layer, const Shape& input) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    const auto field = static_cast<std::size_t>(conv->field);
    const auto kernels = static_cast<std::size_t>(conv->kernels);
    return field * field * static_cast<std::size_t>(input.depth) * kernels + kernels;
  }
  if (const auto* fc = std::get_if<FcLayer>(&layer)) {
    const auto outputs = static_cast<std::size_t>(fc->outputs);
    return outputs * input.size() + outputs;
  }
  return 0;
}

PartialPlan plan_partial(const ArchSpec& arch, int bytes_per_element) {
  if (bytes_per_element < 1) {
    throw Error(ErrorKind::Precondition, "bytes per element must be positive");
  }
  validate(arch);
  PartialPlan result;
  auto& report = result.report;
  report.arch_name = arch.name;
  report.bytes_per_element = bytes_per_element;

  Shape current = arch.input_shape();
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    LayerPlan lp{kind_of(layer), {}, 0, 0};
    try {
      lp.output = layer_output_shape(layer, current);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "layer " << i << " (" << to_string(lp.kind) << "): " << e.what();
      result.failure = FitFailure{static_cast<int>(i), e.kind(), os.str()};
      break;
    }
    lp.parameters = layer_parameter_count(layer, current);
    lp.activations = lp.output.size();
    report.total_parameters += lp.parameters;
    report.total_activations += lp.activations;
    if (lp.kind == LayerKind::Conv) report.conv_activations += lp.activations;
    report.layers.push_back(lp);
    current = lp.output;
  }
  report.activation_bytes =
      report.total_activations * static_cast<std::size_t>(bytes_per_element);
  return result;
}

PlanReport plan(const ArchSpec& arch, int bytes_per_element) {
  auto partial = plan_partial(arch, bytes_per_element);
  if (partial.failure) throw Error(partial.failure->kind, partial.failure->message);
  return std::move(partial.report);
}

int effective_receptive_field(std::span<const ConvStep> convs) {
  if (convs.empty()) throw Error(ErrorKind::Precondition, "receptive field of an empty stack");
  long long field = convs.front().field;
  long long jump = convs.front().stride;
  for (std::size_t i = 1; i < convs.size(); ++i) {
    field += (convs[i].field - 1) * jump;
    jump *= convs[i].stride;
  }
  return static_cast<int>(field);
}

std::string_view to_string(Severity severity) noexcept {
  switch (severity) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Hint: return "hint";
  }
  return "?";
}

namespace {

constexpr LintRule kRules[] = {
    {"FIT-ERROR", Severity::Error, "layer hyperparameters do not tile its input exactly"},
    {"RECIPE-POW2", Severity::Warning, "input side should be recursively divisible by two"},
    {"RECIPE-PAD", Severity::Hint, "conv zero-padding should be (R - 1) / 2"},
    {"RECIPE-STRIDE1", Severity::Hint, "small conv filters should use stride 1"},
    {"RECIPE-POOLK", Severity::Warning, "pooling windows above 3 discard too much"},
    {"RECIPE-STACK", Severity::Hint, "large conv filters can be split into stacked 3x3 convs"},
};

// 32, 64, 96, 128 and 224 all halve at least five times before turning odd.
constexpr int kMinHalvings = 5;

int halvings(int n) {
  int count = 0;
  while (n > 0 && n % 2 == 0) {
    n /= 2;
    ++count;
  }
  return count;
}

LintDiagnostic make(std::string_view rule, int layer, std::string message) {
  for (const auto& r : kRules) {
    if (r.id == rule) return {r.severity, std::string(rule), layer, std::move(message)};
  }
  throw Error(ErrorKind::Precondition, "unknown lint rule " + std::string(rule));
}

}  // namespace

std::span<const LintRule> lint_rulebook() { return kRules; }

std::vector<LintDiagnostic> lint(const ArchSpec& arch) {
  std::vector<LintDiagnostic> out;
  const auto input = arch.input_shape();

  for (const int side : {input.height, input.width}) {
    if (halvings(side) < kMinHalvings) {
      std::ostringstream os;
      os << "input side " << side << " halves only " << halvings(side)
         << " time(s); prefer 32, 64, 96, 128 or 224";
      out.push_back(make("RECIPE-POW2", 0, os.str()));
      break;
    }
  }

  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (const auto* conv = std::get_if<ConvLayer>(&arch.layers[i])) {
      if (2 * conv->pad != conv->field - 1) {
        std::ostringstream os;
        if (conv->field % 2 == 1) {
          os << "Z=" << conv->pad << " with R=" << conv->field << "; use Z=" << (conv->field - 1) / 2
             << " to preserve spatial size";
        } else {
          os << "even R=" << conv->field << " cannot preserve spatial size with symmetric padding";
        }
        out.push_back(make("RECIPE-PAD", idx, os.str()));
      }
      if (conv->field <= 5 && conv->stride > 1) {
        std::ostringstream os;
        os << "R=" << conv->field << " with S=" << conv->stride << "; small filters should use S=1";
        out.push_back(make("RECIPE-STRIDE1", idx, os.str()));
      }
      if (conv->field >= 7) {
        std::ostringstream os;
        os << "R=" << conv->field << " covers the same field as " << (conv->field - 1) / 2
           << " stacked 3x3 convs with fewer weights";
        out.push_back(make("RECIPE-STACK", idx, os.str()));
      }
    } else if (const auto* pool = std::get_if<PoolLayer>(&arch.layers[i])) {
      if (pool->pool.window > 3) {
        std::ostringstream os;
        os << "pool window " << pool->pool.window << " exceeds 3";
        out.push_back(make("RECIPE-POOLK", idx, os.str()));
      }
    }
  }

  const auto partial = plan_partial(arch);
  if (partial.failure) {
    out.push_back(make("FIT-ERROR", partial.failure->layer, partial.failure->message));
  }
  return out;
}

bool has_errors(std::span<const LintDiagnostic> diagnostics) {
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

std::string format_diagnostics(std::span<const LintDiagnostic> diagnostics) {
  std::ostringstream os;
  for (const auto& d : diagnostics) {
    os << to_string(d.severity) << ' ' << d.rule << ' ' << d.layer << ' ' << d.message << '\n';
  }
  return os.str();
}

std::string format_plan_table(const PlanReport& report) {
  std::ostringstream os;
  os << "arch " << report.arch_name << '\n';
  os << std::left << std::setw(6) << "layer" << std::setw(8) << "kind" << std::setw(16) << "output"
     << std::right << std::setw(14) << "params" << std::setw(16) << "activations" << '\n';
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    os << std::left << std::setw(6) << i << std::setw(8) << to_string(l.kind) << std::setw(16)
       << to_string(l.output) << std::right << std::setw(14) << l.parameters << std::setw(16)
       << l.activations << '\n';
  }
  os << "total parameters " << report.total_parameters << '\n';
  os << "total activations " << report.total_activations << '\n';
  os << "conv activations " << report.conv_activations << '\n';
  os << "activation bytes " << report.activation_bytes << " (" << report.bytes_per_element
     << " bytes/element)\n";
  return os.str();
}

std::string plan_to_json(const PlanReport& report, std::span<const LintDiagnostic> diagnostics) {
  nlohmann::json doc;
  doc["arch"] = report.arch_name;
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : report.layers) {
    doc["layers"].push_back({{"kind", to_string(l.kind)},
                             {"output", {l.output.height, l.output.width, l.output.depth}},
                             {"parameters", l.parameters},
                             {"activations", l.activations}});
  }
  doc["total_parameters"] = report.total_parameters;
  doc["total_activations"] = report.total_activations;
  doc["conv_activations"] = report.conv_activations;
  doc["bytes_per_element"] = report.bytes_per_element;
  doc["activation_bytes"] = report.activation_bytes;
  doc["diagnostics"] = nlohmann::json::array();
  for (const auto& d : diagnostics) {
    doc["diagnostics"].push_back({{"severity", to_string(d.severity)},
                                  {"rule", d.rule},
                                  {"layer", d.layer},
                                  {"message", d.message}});
  }
  return doc.dump(2);
}

}  // namespace cnn
