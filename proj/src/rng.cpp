#include "conecraft/rng.hpp"

#include <cmath>

namespace conecraft {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream_id)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_id_(stream_id) {}

void Philox4x32::refill() {
  const Block out = generate_block(
      {static_cast<std::uint32_t>(block_index_), static_cast<std::uint32_t>(block_index_ >> 32),
       static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)},
      key_);
  ++block_index_;
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
}

namespace detail {

// Marsaglia-Tsang layers for the unnormalised density exp(-x^2 / 2).
const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables = [] {
    constexpr double r = 3.654152885361008796;
    constexpr double v = 4.92867323399e-3;
    auto pdf = [](double x) { return std::exp(-0.5 * x * x); };
    ZigguratTables t{};
    t.x[0] = v / pdf(r);
    t.x[1] = r;
    for (int i = 2; i < 256; ++i) t.x[i] = std::sqrt(-2.0 * std::log(v / t.x[i - 1] + pdf(t.x[i - 1])));
    t.x[256] = 0.0;
    for (int i = 0; i <= 256; ++i) t.f[i] = pdf(t.x[i]);
    return t;
  }();
  return tables;
}

}  // namespace detail

double RngStream::normal_slow(int layer, double x, double u) {
  const detail::ZigguratTables& tab = detail::ziggurat_tables();
  constexpr double r = 3.654152885361008796;
  for (;;) {
    if (layer == 0) {
      // tail beyond r
      double tx, ty;
      do {
        tx = std::log(1.0 - uniform()) / r;
        ty = std::log(1.0 - uniform());
      } while (-2.0 * ty < tx * tx);
      return u < 0.0 ? tx - r : r - tx;
    }
    if (tab.f[layer + 1] + (tab.f[layer] - tab.f[layer + 1]) * uniform() < std::exp(-0.5 * x * x))
      return x;
    const std::uint64_t bits = engine_();
    layer = static_cast<int>(bits & 0xFF);
    u = static_cast<double>(bits >> 12) * 0x1.0p-51 - 1.0;
    x = u * tab.x[layer];
    if (std::abs(x) < tab.x[layer + 1]) return x;
  }
}

RngStream seed_stream(std::uint64_t master_seed, std::uint64_t id) { return RngStream(master_seed, id); }

std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5851F42D4C957F2Dull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

}  // namespace conecraft
