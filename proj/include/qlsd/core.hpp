#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace qlsd {

using ParamVector = Eigen::VectorXd;

// One Philox4x32 block with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                          std::array<std::uint32_t, 2> key);

// Keyed counter-based generator (Philox4x32-10). A stream is a plain value:
// copying it and drawing from the copy replays the same sequence.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  // Key extended with further labels. Equal (seed, labels) give equal streams.
  RandomStream substream(std::initializer_list<std::int64_t> labels) const;
  RandomStream substream(const std::vector<std::int64_t>& labels) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_left();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::int64_t>& labels() const { return labels_; }

  friend bool operator==(const RandomStream& a, const RandomStream& b) {
    return a.key_ == b.key_ && a.counter_ == b.counter_ && a.buffered_ == b.buffered_ &&
           a.buffer_ == b.buffer_ && a.has_spare_normal_ == b.has_spare_normal_ &&
           a.spare_normal_ == b.spare_normal_;
  }

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::vector<std::int64_t> labels_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

RandomStream substream(const RandomStream& root, const std::vector<std::int64_t>& labels);

// d i.i.d. standard normals; advances the stream.
ParamVector gaussian_draw(RandomStream& stream, int d);

bool all_finite(const ParamVector& v);
void require_finite(const ParamVector& v, const char* what);

struct IterationRecord {
  std::int64_t k = 0;
  ParamVector theta;
  std::uint64_t bits_uplink = 0;
  int active_count = 0;
};

// Purpose labels for substreams.
enum class StreamPurpose : std::int64_t {
  Noise = 1,
  Participation = 2,
  Minibatch = 3,
  Quantizer = 4,
  DataSizes = 10,
  DataClient = 11,
  DataHyper = 12,
  Reference = 20,
};

inline std::int64_t label(StreamPurpose p) { return static_cast<std::int64_t>(p); }

}  // namespace qlsd
