#pragma once

// Keyed random streams. A stream is a pure function of (seed, StreamId): any
// work unit can rebuild its own stream without coordinating with others, so
// results do not depend on scheduling.

#include <array>
#include <cstdint>

namespace itconv {

enum class Purpose : std::uint64_t {
  Data = 1,
  Amputation = 2,
  Initialize = 3,
  Sweep = 4,
  Auxiliary = 5,
};

struct StreamId {
  std::uint64_t repetition = 0;
  std::uint64_t condition = 0;
  std::uint64_t chain = 0;
  Purpose purpose = Purpose::Auxiliary;
  std::uint64_t step = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

// xoshiro256** seeded by hashing the key through splitmix64.
class RngStream {
 public:
  RngStream(std::uint64_t seed, const StreamId& id);

  std::uint64_t seed() const noexcept { return seed_; }
  const StreamId& id() const noexcept { return id_; }

  // Sibling stream under the same seed.
  RngStream with_id(const StreamId& id) const { return RngStream(seed_, id); }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0, 1).
  double uniform_open() noexcept;
  // Unbiased integer on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  // Marsaglia polar method; the second variate of each pair is cached.
  double std_normal() noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace itconv
