#include "cnn/arch.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cnn {

std::string_view to_string(PoolKind kind) noexcept {
  switch (kind) {
    case PoolKind::Max: return "max";
    case PoolKind::Average: return "avg";
    case PoolKind::L2Norm: return "l2";
    case PoolKind::L1Norm: return "l1";
  }
  return "?";
}

LayerKind kind_of(const LayerSpec& layer) noexcept {
  return static_cast<LayerKind>(layer.index());
}

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::Pool: return "pool";
    case LayerKind::Fc: return "fc";
  }
  return "?";
}

const Shape& ArchSpec::input_shape() const {
  if (layers.empty() || !std::holds_alternative<InputLayer>(layers.front())) {
    throw Error(ErrorKind::ArchParse, "architecture does not start with an input layer");
  }
  return std::get<InputLayer>(layers.front()).shape;
}

namespace {

[[noreturn]] void invalid(std::size_t layer, const std::string& what) {
  throw Error(ErrorKind::ArchParse, "layer " + std::to_string(layer) + ": " + what);
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

struct LineParser {
  std::size_t line_no;
  std::vector<std::string_view> words;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ArchParse, "line " + std::to_string(line_no) + ": " + what);
  }

  void expect_args(std::size_t n) const {
    if (words.size() - 1 != n) {
      fail("'" + std::string(words[0]) + "' expects " + std::to_string(n) + " argument(s), got " +
           std::to_string(words.size() - 1));
    }
  }

  int integer(std::size_t i) const {
    const auto w = words[i];
    int value = 0;
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), value);
    if (ec != std::errc{} || ptr != w.data() + w.size()) {
      fail("expected an integer, got '" + std::string(w) + "'");
    }
    return value;
  }
};

PoolKind parse_pool_kind(const LineParser& p, std::string_view word) {
  if (word == "max") return PoolKind::Max;
  if (word == "avg") return PoolKind::Average;
  if (word == "l2") return PoolKind::L2Norm;
  if (word == "l1") return PoolKind::L1Norm;
  p.fail("unknown pooling kind '" + std::string(word) + "'");
}

}  // namespace

void validate(const ArchSpec& arch) {
  if (arch.layers.empty()) throw Error(ErrorKind::ArchParse, "architecture has no layers");
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    if (const auto* in = std::get_if<InputLayer>(&layer)) {
      if (i != 0) invalid(i, "input layer must be first and unique");
      if (in->shape.height < 1 || in->shape.width < 1 || in->shape.depth < 1) {
        invalid(i, "input dimensions must be positive");
      }
    } else if (i == 0) {
      invalid(i, "first layer must be an input layer");
    } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      if (conv->field < 1 || conv->kernels < 1 || conv->stride < 1) {
        invalid(i, "conv R, K and S must be positive");
      }
      if (conv->pad < 0) invalid(i, "conv padding must be non-negative");
    } else if (const auto* pool = std::get_if<PoolLayer>(&layer)) {
      if (pool->pool.window < 1 || pool->pool.stride < 1) {
        invalid(i, "pool window and stride must be positive");
      }
    } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
      if (fc->outputs < 1) invalid(i, "fc output count must be positive");
    }
  }
}

ArchSpec parse_arch(std::string_view text, std::string default_name) {
  ArchSpec arch;
  arch.name = std::move(default_name);
  bool named = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    LineParser p{line_no, split_words(line)};
    if (p.words.empty()) continue;
    const auto keyword = p.words[0];

    if (keyword == "name") {
      if (named || !arch.layers.empty()) p.fail("'name' must appear once, before any layer");
      if (p.words.size() < 2) p.fail("'name' expects a value");
      arch.name.clear();
      for (std::size_t i = 1; i < p.words.size(); ++i) {
        if (i > 1) arch.name += ' ';
        arch.name += p.words[i];
      }
      named = true;
    } else if (keyword == "input") {
      p.expect_args(3);
      if (!arch.layers.empty()) p.fail("'input' must be the first and only input layer");
      arch.layers.emplace_back(InputLayer{Shape{p.integer(1), p.integer(2), p.integer(3)}});
    } else if (keyword == "conv") {
      p.expect_args(4);
      arch.layers.emplace_back(ConvLayer{p.integer(1), p.integer(2), p.integer(3), p.integer(4)});
    } else if (keyword == "relu") {
      p.expect_args(0);
      arch.layers.emplace_back(ReluLayer{});
    } else if (keyword == "pool") {
      p.expect_args(3);
      arch.layers.emplace_back(
          PoolLayer{PoolSpec{parse_pool_kind(p, p.words[1]), p.integer(2), p.integer(3)}});
    } else if (keyword == "fc") {
      p.expect_args(1);
      arch.layers.emplace_back(FcLayer{p.integer(1)});
    } else {
      p.fail("unknown keyword '" + std::string(keyword) + "'");
    }
    if (arch.layers.size() == 1 && !std::holds_alternative<InputLayer>(arch.layers.front())) {
      p.fail("the first layer must be 'input'");
    }
    if (arch.layers.empty()) continue;
    try {
      validate(arch);
    } catch (const Error& e) {
      p.fail(e.what());
    }
  }
  if (arch.layers.empty()) throw Error(ErrorKind::ArchParse, "architecture has no layers");
  return arch;
}

ArchSpec load_arch_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open architecture file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_arch(buffer.str(), std::filesystem::path(path).stem().string());
}

std::string format_arch(const ArchSpec& arch) {
  std::ostringstream os;
  if (!arch.name.empty()) os << "name " << arch.name << '\n';
  for (const auto& layer : arch.layers) {
    std::visit(
        [&os](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, InputLayer>) {
            os << "input " << l.shape.height << ' ' << l.shape.width << ' ' << l.shape.depth;
          } else if constexpr (std::is_same_v<T, ConvLayer>) {
            os << "conv " << l.field << ' ' << l.kernels << ' ' << l.stride << ' ' << l.pad;
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            os << "relu";
          } else if constexpr (std::is_same_v<T, PoolLayer>) {
            os << "pool " << to_string(l.pool.kind) << ' ' << l.pool.window << ' '
               << l.pool.stride;
          } else {
            os << "fc " << l.outputs;
          }
        },
        layer);
    os << '\n';
  }
  return os.str();
}

}  // namespace cnn
