#include "qlsd/compression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "qlsd/errors.hpp"

namespace qlsd {

QuantizerSpec QuantizerSpec::Levels(std::uint32_t s) {
  if (s < 1) throw ConfigError("quantizer needs s >= 1");
  return QuantizerSpec{false, s};
}

std::string to_string(const QuantizerSpec& spec) {
  return spec.identity ? "identity" : "s=" + std::to_string(spec.s);
}

QuantizerSpec quantizer_from_string(const std::string& text) {
  if (text == "identity" || text == "none") return QuantizerSpec::Identity();
  try {
    if (text.rfind("s=", 0) == 0) {
      const long long s = std::stoll(text.substr(2));
      if (s < 1 || s > (1LL << 31)) throw ConfigError("quantizer levels out of range: " + text);
      return QuantizerSpec::Levels(static_cast<std::uint32_t>(s));
    }
    if (text.rfind("bits=", 0) == 0) {
      const int p = std::stoi(text.substr(5));
      if (p < 0 || p > 31) throw ConfigError("quantizer bits out of range: " + text);
      return QuantizerSpec::Bits(p);
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("cannot parse compressor '" + text + "' (use identity, s=<n> or bits=<p>)");
}

int CompressedMessage::dim() const {
  return spec.identity ? static_cast<int>(raw.size()) : static_cast<int>(levels.size());
}

bool operator==(const CompressedMessage& a, const CompressedMessage& b) {
  if (!(a.spec == b.spec)) return false;
  if (a.spec.identity) {
    return a.raw.size() == b.raw.size() && (a.raw.array() == b.raw.array()).all();
  }
  return a.norm == b.norm && a.signs == b.signs && a.levels == b.levels;
}

CompressedMessage quantize(const ParamVector& v, const QuantizerSpec& spec, RandomStream& stream) {
  require_finite(v, "quantizer input");
  CompressedMessage msg;
  msg.spec = spec;
  const int d = static_cast<int>(v.size());
  if (spec.identity) {
    msg.raw = v;
    msg.norm = v.norm();
    return msg;
  }
  msg.signs.assign(d, 1);
  msg.levels.assign(d, 0);
  const double norm = v.norm();
  msg.norm = norm;
  if (norm == 0.0) return msg;
  const double s = spec.s;
  for (int j = 0; j < d; ++j) {
    const double xi = stream.uniform();
    const double r = s * std::abs(v[j]) / norm;
    double l = std::floor(r);
    if (l > s) l = s;
    std::uint32_t level = static_cast<std::uint32_t>(l);
    if (xi <= r - l && level < spec.s) ++level;
    msg.levels[j] = level;
    if (level > 0 && v[j] < 0) msg.signs[j] = -1;
  }
  return msg;
}

CompressedMessage make_message(const QuantizerSpec& spec, double norm,
                               std::vector<std::int8_t> signs, std::vector<std::uint32_t> levels) {
  if (spec.identity) throw ContractError("make_message builds quantized messages only");
  if (signs.size() != levels.size()) throw ContractError("signs/levels length mismatch");
  CompressedMessage msg;
  msg.spec = spec;
  msg.norm = norm;
  msg.signs = std::move(signs);
  msg.levels = std::move(levels);
  return msg;
}

ParamVector decode(const CompressedMessage& msg) {
  if (msg.spec.identity) return msg.raw;
  const int d = static_cast<int>(msg.levels.size());
  ParamVector out(d);
  const double s = msg.spec.s;
  for (int j = 0; j < d; ++j) {
    if (msg.levels[j] > msg.spec.s) {
      throw CorruptionError("level " + std::to_string(msg.levels[j]) + " exceeds s=" +
                            std::to_string(msg.spec.s));
    }
    out[j] = msg.signs[j] * msg.norm * (msg.levels[j] / s);
  }
  return out;
}

double omega(const QuantizerSpec& spec, int d) {
  if (d < 1) throw DimensionError("omega needs d >= 1");
  if (spec.identity) return 0.0;
  const double s = spec.s;
  return std::min(d / (s * s), std::sqrt(static_cast<double>(d)) / s);
}

int elias_gamma_length(std::uint64_t n) {
  if (n == 0) throw DomainError("Elias-gamma codes positive integers only");
  return 2 * (std::bit_width(n) - 1) + 1;
}

std::uint64_t bit_cost(const CompressedMessage& msg) {
  if (msg.spec.identity) return 32ULL * static_cast<std::uint64_t>(msg.raw.size());
  std::uint64_t bits = 32;
  for (std::uint32_t level : msg.levels) {
    bits += elias_gamma_length(std::uint64_t{level} + 1) + (level > 0 ? 1 : 0);
  }
  return bits;
}

void Bitstring::push(bool bit) {
  if (bit_length % 8 == 0) bytes.push_back(0);
  if (bit) bytes.back() |= static_cast<std::uint8_t>(0x80u >> (bit_length % 8));
  ++bit_length;
}

void Bitstring::push_bits(std::uint64_t value, int count) {
  for (int k = count - 1; k >= 0; --k) push((value >> k) & 1u);
}

bool Bitstring::at(std::uint64_t pos) const {
  if (pos >= bit_length) throw CorruptionError("bitstring truncated");
  return (bytes[pos / 8] >> (7 - pos % 8)) & 1u;
}

std::string Bitstring::to_string() const {
  std::string out;
  out.reserve(bit_length);
  for (std::uint64_t k = 0; k < bit_length; ++k) out.push_back(at(k) ? '1' : '0');
  return out;
}

namespace {

void push_float(Bitstring& bits, double x) {
  bits.push_bits(std::bit_cast<std::uint32_t>(static_cast<float>(x)), 32);
}

double read_float(const Bitstring& bits, std::uint64_t& pos) {
  std::uint32_t u = 0;
  for (int k = 0; k < 32; ++k) u = (u << 1) | (bits.at(pos++) ? 1u : 0u);
  return std::bit_cast<float>(u);
}

}  // namespace

Bitstring encode_message(const CompressedMessage& msg) {
  Bitstring bits;
  if (msg.spec.identity) {
    for (Eigen::Index j = 0; j < msg.raw.size(); ++j) push_float(bits, msg.raw[j]);
    return bits;
  }
  push_float(bits, msg.norm);
  for (std::size_t j = 0; j < msg.levels.size(); ++j) {
    const std::uint64_t n = std::uint64_t{msg.levels[j]} + 1;
    const int width = std::bit_width(n);
    for (int k = 0; k < width - 1; ++k) bits.push(false);
    bits.push_bits(n, width);
    if (msg.levels[j] > 0) bits.push(msg.signs[j] < 0);
  }
  return bits;
}

CompressedMessage decode_bitstring(const Bitstring& bits, const QuantizerSpec& spec, int d) {
  if (d < 1) throw DimensionError("decode_bitstring needs d >= 1");
  std::uint64_t pos = 0;
  CompressedMessage msg;
  msg.spec = spec;
  if (spec.identity) {
    msg.raw.resize(d);
    for (int j = 0; j < d; ++j) msg.raw[j] = read_float(bits, pos);
    msg.norm = msg.raw.norm();
  } else {
    msg.norm = read_float(bits, pos);
    msg.signs.assign(d, 1);
    msg.levels.assign(d, 0);
    for (int j = 0; j < d; ++j) {
      int zeros = 0;
      while (!bits.at(pos)) {
        ++pos;
        if (++zeros > 40) throw CorruptionError("malformed Elias-gamma prefix");
      }
      std::uint64_t n = 0;
      for (int k = 0; k <= zeros; ++k) n = (n << 1) | (bits.at(pos++) ? 1u : 0u);
      const std::uint64_t level = n - 1;
      if (level > spec.s) throw CorruptionError("decoded level exceeds s");
      msg.levels[j] = static_cast<std::uint32_t>(level);
      if (level > 0 && bits.at(pos++)) msg.signs[j] = -1;
    }
  }
  if (pos != bits.bit_length) throw CorruptionError("trailing bits after message");
  return msg;
}

}  // namespace qlsd
