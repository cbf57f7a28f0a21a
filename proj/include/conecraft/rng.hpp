#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

#include "conecraft/types.hpp"

namespace conecraft {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each stream is
/// addressed by a 64-bit key (the master seed) and a 64-bit stream id occupying
/// the upper half of the 128-bit counter; the lower half counts blocks. Stream
/// state is therefore a pure function of (seed, stream id): no stream depends on
/// how far any other stream has been advanced.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream_id);

  static Block generate_block(Block counter, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

  result_type operator()() {
    if (buffered_ == 0) refill();
    return buffer_[2 - buffered_--];
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  void refill();

  Key key_;
  std::uint64_t stream_id_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// One independent random stream: uniform and standard-normal variates.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : engine_(seed, stream_id) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard normal by a 256-layer ziggurat; one engine draw in ~99% of calls.
  double normal();

  /// Fills `out` (already sized) with independent Normal(0, scale^2) entries.
  void fill_normal(Vec& out, double scale) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = scale * normal();
  }

  Philox4x32& engine() { return engine_; }

 private:
  double normal_slow(int layer, double x, double u);

  Philox4x32 engine_;
};

namespace detail {
struct ZigguratTables {
  double x[257];
  double f[257];
};
const ZigguratTables& ziggurat_tables();
}  // namespace detail

inline double RngStream::normal() {
  static const detail::ZigguratTables& tab = detail::ziggurat_tables();
  const std::uint64_t bits = engine_();
  const int layer = static_cast<int>(bits & 0xFF);
  // symmetric uniform in [-1, 1) from the top 52 bits
  const double u = static_cast<double>(bits >> 12) * 0x1.0p-51 - 1.0;
  const double x = u * tab.x[layer];
  if (std::abs(x) < tab.x[layer + 1]) return x;
  return normal_slow(layer, x, u);
}

/// Independent stream derived from a master seed and a stream id.
RngStream seed_stream(std::uint64_t master_seed, std::uint64_t stream_id);

/// Deterministic 64-bit stream id from a structured address such as
/// {experiment tag, epsilon index, start index, batch index}.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts);

}  // namespace conecraft
