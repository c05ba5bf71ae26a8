#include "qlsd/core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qlsd/errors.hpp"

namespace qlsd {
namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fold_label(std::uint64_t key, std::int64_t label) {
  return mix64(key ^ mix64(static_cast<std::uint64_t>(label) + 0x632be59bd9b4e019ULL));
}

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                          std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

namespace {

void set_key(std::array<std::uint32_t, 2>& key, std::uint64_t k) {
  key[0] = static_cast<std::uint32_t>(k);
  key[1] = static_cast<std::uint32_t>(k >> 32);
}

std::uint64_t get_key(const std::array<std::uint32_t, 2>& key) {
  return static_cast<std::uint64_t>(key[0]) | (static_cast<std::uint64_t>(key[1]) << 32);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed) { set_key(key_, mix64(seed)); }

RandomStream RandomStream::substream(std::initializer_list<std::int64_t> labels) const {
  return substream(std::vector<std::int64_t>(labels));
}

RandomStream RandomStream::substream(const std::vector<std::int64_t>& labels) const {
  if (labels.empty()) throw ContractError("substream requires at least one label");
  RandomStream out(seed_);
  out.labels_ = labels_;
  std::uint64_t k = get_key(key_);
  for (std::int64_t l : labels) {
    k = fold_label(k, l);
    out.labels_.push_back(l);
  }
  set_key(out.key_, k);
  return out;
}

void RandomStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(counter_),
                                            static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
  buffer_ = philox4x32_10(ctr, key_);
  ++counter_;
  buffered_ = 4;
}

std::uint64_t RandomStream::next_u64() {
  if (buffered_ < 2) refill();
  const int pos = 4 - buffered_;
  buffered_ -= 2;
  return static_cast<std::uint64_t>(buffer_[pos]) |
         (static_cast<std::uint64_t>(buffer_[pos + 1]) << 32);
}

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::uniform_open_left() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw ContractError("below(0)");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t u;
  do {
    u = next_u64();
  } while (u >= limit);
  return u % n;
}

double RandomStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_open_left();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(a);
  has_spare_normal_ = true;
  return r * std::cos(a);
}

RandomStream substream(const RandomStream& root, const std::vector<std::int64_t>& labels) {
  return root.substream(labels);
}

ParamVector gaussian_draw(RandomStream& stream, int d) {
  if (d <= 0) throw DimensionError("gaussian_draw needs d >= 1, got " + std::to_string(d));
  ParamVector z(d);
  for (int j = 0; j < d; ++j) z[j] = stream.normal();
  return z;
}

bool all_finite(const ParamVector& v) { return v.allFinite(); }

void require_finite(const ParamVector& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
}

}  // namespace qlsd
