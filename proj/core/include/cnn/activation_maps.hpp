#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnn/network.hpp"

namespace cnn {

// Output of the first conv layer for `input`. Throws ErrorKind::Precondition
// when the network has no conv layer.
Volume first_conv_activations(const Network& net, const Volume& input);

// Slice `channel` of `v`, min-max scaled to 0..255 (a constant slice maps to 0),
// rows top to bottom.
std::vector<std::uint8_t> slice_to_gray(const Volume& v, int channel);

// Binary portable graymap: "P5\n<width> <height>\n255\n" followed by the pixels.
std::string encode_pgm(int width, int height, std::span<const std::uint8_t> pixels);

// Writes act_<k>.pgm for every slice of the first conv layer's output and
// returns the written paths in slice order.
std::vector<std::string> export_activation_maps(const Network& net, const Volume& input,
                                                const std::string& out_dir);

}  // namespace cnn
