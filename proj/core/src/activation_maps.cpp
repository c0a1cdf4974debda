#include "cnn/activation_maps.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace cnn {

Volume first_conv_activations(const Network& net, const Volume& input) {
  const auto& specs = net.arch().layers;
  const auto it = std::find_if(specs.begin(), specs.end(), [](const LayerSpec& l) {
    return kind_of(l) == LayerKind::Conv;
  });
  if (it == specs.end()) {
    throw Error(ErrorKind::Precondition, "architecture '" + net.arch().name + "' has no conv layer");
  }
  ForwardTrace trace;
  forward(net, input, &trace);
  return trace.activations[static_cast<std::size_t>(it - specs.begin())];
}

std::vector<std::uint8_t> slice_to_gray(const Volume& v, int channel) {
  if (channel < 0 || channel >= v.depth()) {
    throw Error(ErrorKind::Index, "channel " + std::to_string(channel) + " outside depth " +
                                      std::to_string(v.depth()));
  }
  Real lo = v(0, 0, channel);
  Real hi = lo;
  for (int y = 0; y < v.height(); ++y) {
    for (int x = 0; x < v.width(); ++x) {
      lo = std::min(lo, v(x, y, channel));
      hi = std::max(hi, v(x, y, channel));
    }
  }
  std::vector<std::uint8_t> gray;
  gray.reserve(static_cast<std::size_t>(v.height()) * static_cast<std::size_t>(v.width()));
  const Real range = hi - lo;
  for (int y = 0; y < v.height(); ++y) {
    for (int x = 0; x < v.width(); ++x) {
      const Real t = range > 0.0 ? (v(x, y, channel) - lo) / range : 0.0;
      gray.push_back(static_cast<std::uint8_t>(std::lround(t * 255.0)));
    }
  }
  return gray;
}

std::string encode_pgm(int width, int height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::Shape, "PGM pixel count does not match " + std::to_string(width) + "x" +
                                      std::to_string(height));
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

std::vector<std::string> export_activation_maps(const Network& net, const Volume& input,
                                                const std::string& out_dir) {
  const Volume maps = first_conv_activations(net, input);
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (int k = 0; k < maps.depth(); ++k) {
    const auto path = (std::filesystem::path(out_dir) / ("act_" + std::to_string(k) + ".pgm")).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const auto pgm = encode_pgm(maps.width(), maps.height(), slice_to_gray(maps, k));
    out.write(pgm.data(), static_cast<std::streamsize>(pgm.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace cnn
