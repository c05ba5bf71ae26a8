#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlsd/core.hpp"

namespace qlsd {

struct QuantizerSpec {
  bool identity = true;
  std::uint32_t s = 0;

  static QuantizerSpec Identity() { return {}; }
  static QuantizerSpec Levels(std::uint32_t s);
  static QuantizerSpec Bits(int p) { return Levels(std::uint32_t{1} << p); }

  friend bool operator==(const QuantizerSpec&, const QuantizerSpec&) = default;
};

std::string to_string(const QuantizerSpec& spec);
// "identity", "s=<levels>" or "bits=<p>".
QuantizerSpec quantizer_from_string(const std::string& text);

struct CompressedMessage {
  QuantizerSpec spec;
  double norm = 0.0;
  std::vector<std::int8_t> signs;      // +1 / -1; +1 whenever the level is 0
  std::vector<std::uint32_t> levels;   // each in [0, s]
  ParamVector raw;                     // identity messages carry the vector itself

  int dim() const;
  friend bool operator==(const CompressedMessage& a, const CompressedMessage& b);
};

CompressedMessage quantize(const ParamVector& v, const QuantizerSpec& spec, RandomStream& stream);

// Message with explicit levels, for callers that enumerate quantizer outcomes.
CompressedMessage make_message(const QuantizerSpec& spec, double norm,
                               std::vector<std::int8_t> signs, std::vector<std::uint32_t> levels);

ParamVector decode(const CompressedMessage& msg);

double omega(const QuantizerSpec& spec, int d);

int elias_gamma_length(std::uint64_t n);
std::uint64_t bit_cost(const CompressedMessage& msg);

// MSB-first bit buffer.
struct Bitstring {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;

  void push(bool bit);
  void push_bits(std::uint64_t value, int count);
  bool at(std::uint64_t pos) const;
  std::string to_string() const;  // '0'/'1' characters
};

// Layout: [32-bit IEEE-754 norm][per coordinate: Elias-gamma(level+1), sign bit iff level>0].
// Identity messages are d consecutive 32-bit floats.
Bitstring encode_message(const CompressedMessage& msg);
CompressedMessage decode_bitstring(const Bitstring& bits, const QuantizerSpec& spec, int d);

struct BitLedger {
  std::vector<std::uint64_t> per_iteration;
  std::uint64_t total = 0;

  void record(std::uint64_t bits) {
    per_iteration.push_back(bits);
    total += bits;
  }
};

}  // namespace qlsd
