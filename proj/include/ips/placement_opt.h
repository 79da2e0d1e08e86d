#ifndef IPS_PLACEMENT_OPT_H_
#define IPS_PLACEMENT_OPT_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ips/radio_model.h"

namespace ips {

struct NeighborhoodSpec {
  double radius = 0.0;  // m, strict: neighbors satisfy distance < radius

  void Validate() const;
};

// 1.5x the larger grid pitch, which takes in the 8-connected neighbors of
// an interior RP on the default grid.
NeighborhoodSpec DefaultNeighborhood(const RoomSpec& room);

struct PsoConfig {
  int swarm_size = 30;
  int max_iters = 300;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  // Per-dimension velocity limit as a fraction of that dimension's range.
  double velocity_clamp = 0.2;
  std::uint64_t seed = 4;

  void Validate() const;
};

struct Bounds2 {
  Point2 lo;
  Point2 hi;
};

struct PlacementResult {
  Placement best_placement;
  double best_objective = 0.0;
  // Global best after each iteration; non-decreasing.
  std::vector<double> objective_history;
};

// Indices j != i whose RP lies strictly closer than spec.radius to RP i.
std::vector<int> Neighborhood(std::span<const ReferencePoint> rps, int i,
                              const NeighborhoodSpec& spec);

// Sum over RPs i and neighbors j of the dissimilarity between their noiseless
// fingerprints. Each unordered neighbor pair contributes twice.
double PlacementObjective(const Placement& placement,
                          std::span<const ReferencePoint> rps,
                          const NeighborhoodSpec& spec,
                          const PathLossParams& params);

using PlacementObjectiveFn = std::function<double(const Placement&)>;

// Maximizes `objective` over k sources inside `bounds`. Particles are flat
// (x1, y1, ..., xk, yk) vectors; a component leaving the box is clamped and
// its velocity zeroed. An objective that throws ips::Error scores -inf.
PlacementResult PsoOptimize(const PlacementObjectiveFn& objective,
                            const Bounds2& bounds, int k,
                            const PsoConfig& config);

// Problem-specific driver: PSO over the room with a finite penalty standing
// in for the domain error when a source lands on an RP.
PlacementResult OptimizePlacement(const RoomSpec& room,
                                  std::span<const ReferencePoint> rps, int k,
                                  const NeighborhoodSpec& spec,
                                  const PathLossParams& params,
                                  const PsoConfig& config);

inline constexpr double kCoincidencePenalty = -1e12;

}  // namespace ips

#endif  // IPS_PLACEMENT_OPT_H_
