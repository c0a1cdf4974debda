#include "cnn/model_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <vector>

namespace cnn {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'N', 'N', 'F'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{p[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

// Reads exactly n bytes or reports how many were available.
std::size_t read_some(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

std::size_t save(const Network& net, std::ostream& out) {
  const std::string arch = format_arch(net.arch());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(arch.size()));
  out.write(arch.data(), static_cast<std::streamsize>(arch.size()));
  std::size_t count = 0;
  for (const auto block : net.parameter_blocks()) {
    for (const Real p : block) put_f64(out, static_cast<double>(p));
    count += block.size();
  }
  if (!out) throw Error(ErrorKind::Io, "checkpoint write failed");
  return 8 + 4 + arch.size() + 8 * count;
}

Network load(std::istream& in) {
  unsigned char header[12];
  if (read_some(in, header, 4) != 4 || !std::equal(kMagic.begin(), kMagic.end(), header)) {
    throw Error(ErrorKind::BadMagic, "not a CNNF checkpoint");
  }
  if (read_some(in, header + 4, 8) != 8) {
    throw Error(ErrorKind::Length, "checkpoint header truncated");
  }
  const auto version = get_u32(header + 4);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::UnknownVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto arch_len = get_u32(header + 8);
  // Grow in chunks so a corrupt length cannot force a huge allocation up front.
  std::string text;
  while (text.size() < arch_len) {
    const std::size_t want = std::min<std::size_t>(arch_len - text.size(), 1 << 16);
    const std::size_t old_size = text.size();
    text.resize(old_size + want);
    if (read_some(in, reinterpret_cast<unsigned char*>(text.data() + old_size), want) != want) {
      throw Error(ErrorKind::Length, "checkpoint architecture block truncated: header says " +
                                         std::to_string(arch_len) + " bytes");
    }
  }
  Network net(parse_arch(text));

  const std::vector<unsigned char> payload{std::istreambuf_iterator<char>(in),
                                           std::istreambuf_iterator<char>()};
  const std::size_t expected = 8 * net.parameter_count();
  if (payload.size() != expected) {
    throw Error(ErrorKind::Length, "checkpoint payload is " + std::to_string(payload.size()) +
                                       " bytes, expected " + std::to_string(expected) + " for " +
                                       std::to_string(net.parameter_count()) + " parameters");
  }
  const unsigned char* p = payload.data();
  for (auto block : net.parameter_blocks()) {
    for (auto& value : block) {
      value = static_cast<Real>(get_f64(p));
      p += 8;
    }
  }
  return net;
}

std::size_t save_file(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  return save(net, out);
}

Network load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return load(in);
}

}  // namespace cnn
