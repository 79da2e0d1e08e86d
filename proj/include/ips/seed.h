#ifndef IPS_SEED_H_
#define IPS_SEED_H_

#include <cstdint>

namespace ips {

// Independent 64-bit seed for sub-stream `stream` of `seed`.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ips

#endif  // IPS_SEED_H_
