#include "mfg/rng.hpp"

namespace mfg {

RngStream RngStream::at(std::uint64_t master_seed, std::uint64_t replication,
                        std::uint64_t agent, std::uint64_t time,
                        std::uint64_t purpose) {
  RngStream s(master_seed);
  // Fold each component through a finalizer round; the constants keep the
  // four coordinates in distinct cycles.
  s.state_ ^= s.next_u64() + 0x632BE59BD9B4E019ull * (replication + 1);
  s.state_ ^= s.next_u64() + 0x9E3779B97F4A7C15ull * (agent + 1);
  s.state_ ^= s.next_u64() + 0xC2B2AE3D27D4EB4Full * (time + 1);
  s.state_ ^= s.next_u64() + 0x165667B19E3779F9ull * (purpose + 1);
  return s;
}

}  // namespace mfg
