#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "cnn/network.hpp"

namespace cnn {

// CNNF checkpoint, version 1. All integers little-endian.
//
//   offset  size  field
//   0       4     magic "CNNF"
//   4       4     u32 version (1)
//   8       4     u32 n, byte length of the architecture text
//   12      n     architecture text as produced by format_arch()
//   12+n    8*P   f64 parameters in Network::parameter_blocks() order: per conv
//                 layer kernels (k, y, x, d) then biases, per fc layer weights
//                 row-major then biases
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t save(const Network& net, std::ostream& out);
Network load(std::istream& in);

std::size_t save_file(const Network& net, const std::string& path);
Network load_file(const std::string& path);

}  // namespace cnn
