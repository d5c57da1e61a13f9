#pragma once

#include <iosfwd>
#include <string>

#include "probshape/network.hpp"

namespace probshape {

// Binary network checkpoint, all integers and reals little-endian:
//
//   bytes 0..7   magic "PSMLP\0\0\1"
//   uint32       number of widths L
//   uint32 x L   layer widths (first 2, last 1)
//   per layer l: float64 weights, row-major (widths[l+1] x widths[l]),
//                then float64 biases (widths[l+1])
//
// Doubles are stored as their IEEE-754 bit patterns, so load(save(net)) is bit-exact.

void save_checkpoint(const NeuralLevelSetd& net, std::ostream& out);
NeuralLevelSetd load_checkpoint(std::istream& in);

void save_checkpoint(const NeuralLevelSetd& net, const std::string& path);
NeuralLevelSetd load_checkpoint(const std::string& path);

}  // namespace probshape
