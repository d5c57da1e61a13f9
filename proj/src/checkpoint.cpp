#include "probshape/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace probshape {
namespace {

constexpr std::array<char, 8> kMagic{'P', 'S', 'M', 'L', 'P', '\0', '\0', '\1'};

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt read_le(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("checkpoint: unexpected end of data");
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

void write_real(std::ostream& out, double x) { write_le(out, std::bit_cast<std::uint64_t>(x)); }
double read_real(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

}  // namespace

void save_checkpoint(const NeuralLevelSetd& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_le(out, static_cast<std::uint32_t>(net.widths().size()));
  for (int w : net.widths()) write_le(out, static_cast<std::uint32_t>(w));
  const auto& p = net.params();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto& w = p.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) write_real(out, w(r, c));
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) write_real(out, p.biases[l](i));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

NeuralLevelSetd load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const auto count = read_le<std::uint32_t>(in);
  if (count < 2 || count > 1024) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> widths(count);
  for (auto& w : widths) w = static_cast<int>(read_le<std::uint32_t>(in));
  NeuralLevelSetd net(widths);
  auto& p = net.mutable_params();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    auto& w = p.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = read_real(in);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = read_real(in);
  }
  return net;
}

void save_checkpoint(const NeuralLevelSetd& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  save_checkpoint(net, out);
}

NeuralLevelSetd load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace probshape
