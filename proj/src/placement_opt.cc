#include "ips/placement_opt.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "ips/error.h"

namespace ips {

void NeighborhoodSpec::Validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::kInvalidConfig, "neighborhood radius must be > 0");
  }
}

NeighborhoodSpec DefaultNeighborhood(const RoomSpec& room) {
  const double pitch = std::max(room.SpacingX(), room.SpacingY());
  // A 1x1 grid has no pitch; any positive radius yields empty neighborhoods.
  return {pitch > 0.0 ? 1.5 * pitch : 1.0};
}

void PsoConfig::Validate() const {
  if (swarm_size < 1) throw Error(ErrorKind::kInvalidConfig, "swarm_size must be >= 1");
  if (max_iters < 1) throw Error(ErrorKind::kInvalidConfig, "max_iters must be >= 1");
  if (!(inertia >= 0.0) || !(cognitive >= 0.0) || !(social >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "PSO coefficients must be >= 0");
  }
  if (!(velocity_clamp > 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "velocity_clamp must be > 0");
  }
}

std::vector<int> Neighborhood(std::span<const ReferencePoint> rps, int i,
                              const NeighborhoodSpec& spec) {
  if (i < 0 || static_cast<std::size_t>(i) >= rps.size()) {
    throw Error(ErrorKind::kNotFound, "RP index " + std::to_string(i) +
                                          " out of range [0, " +
                                          std::to_string(rps.size()) + ")");
  }
  std::vector<int> out;
  for (std::size_t j = 0; j < rps.size(); ++j) {
    if (static_cast<int>(j) == i) continue;
    if (Distance(rps[i].position, rps[j].position) < spec.radius) {
      out.push_back(static_cast<int>(j));
    }
  }
  return out;
}

double PlacementObjective(const Placement& placement,
                          std::span<const ReferencePoint> rps,
                          const NeighborhoodSpec& spec,
                          const PathLossParams& params) {
  spec.Validate();
  params.Validate();
  std::vector<Fingerprint> fps;
  fps.reserve(rps.size());
  for (const ReferencePoint& rp : rps) {
    fps.push_back(PredictFingerprint(placement, rp.position, params));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rps.size(); ++i) {
    for (int j : Neighborhood(rps, static_cast<int>(i), spec)) {
      total += FingerprintDistance(fps[i], fps[j]);
    }
  }
  return total;
}

namespace {

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_score = -std::numeric_limits<double>::infinity();
};

Placement Decode(std::span<const double> flat) {
  Placement p;
  p.sources.reserve(flat.size() / 2);
  for (std::size_t d = 0; d + 1 < flat.size(); d += 2) {
    p.sources.push_back({flat[d], flat[d + 1]});
  }
  return p;
}

double Score(const PlacementObjectiveFn& objective, std::span<const double> flat) {
  try {
    const double v = objective(Decode(flat));
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

PlacementResult PsoOptimize(const PlacementObjectiveFn& objective,
                            const Bounds2& bounds, int k,
                            const PsoConfig& config) {
  config.Validate();
  if (k < 1) throw Error(ErrorKind::kInvalidConfig, "source count must be >= 1");
  if (!(bounds.hi.x > bounds.lo.x) || !(bounds.hi.y > bounds.lo.y)) {
    throw Error(ErrorKind::kInvalidConfig, "placement bounds are degenerate");
  }
  const std::size_t dims = 2 * static_cast<std::size_t>(k);
  std::vector<double> lo(dims), hi(dims), vmax(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    lo[d] = d % 2 == 0 ? bounds.lo.x : bounds.lo.y;
    hi[d] = d % 2 == 0 ? bounds.hi.x : bounds.hi.y;
    vmax[d] = config.velocity_clamp * (hi[d] - lo[d]);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Particle> swarm(config.swarm_size);
  for (Particle& p : swarm) {
    p.position.resize(dims);
    p.velocity.resize(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      p.position[d] = lo[d] + unit(rng) * (hi[d] - lo[d]);
    }
    for (std::size_t d = 0; d < dims; ++d) {
      p.velocity[d] = (2.0 * unit(rng) - 1.0) * vmax[d];
    }
  }

  // Evaluations only read particle state, so they could run in parallel;
  // every random draw happens in the sequential update below.
  std::vector<double> scores(swarm.size());
  auto evaluate_all = [&] {
    for (std::size_t i = 0; i < swarm.size(); ++i) {
      scores[i] = Score(objective, swarm[i].position);
    }
  };

  evaluate_all();
  std::size_t best = swarm.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < swarm.size(); ++i) {
    swarm[i].best_position = swarm[i].position;
    swarm[i].best_score = scores[i];
    if (scores[i] > best_score) {
      best_score = scores[i];
      best = i;
    }
  }
  if (best == swarm.size()) {
    throw Error(ErrorKind::kOptimization,
                "objective failed at every initial particle");
  }
  std::vector<double> global_best = swarm[best].position;

  PlacementResult result;
  result.objective_history.reserve(config.max_iters);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    for (Particle& p : swarm) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = config.inertia * p.velocity[d] +
                   config.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                   config.social * r2 * (global_best[d] - p.position[d]);
        v = std::clamp(v, -vmax[d], vmax[d]);
        double x = p.position[d] + v;
        if (x < lo[d] || x > hi[d]) {
          x = std::clamp(x, lo[d], hi[d]);
          v = 0.0;
        }
        p.position[d] = x;
        p.velocity[d] = v;
      }
    }
    evaluate_all();
    for (std::size_t i = 0; i < swarm.size(); ++i) {
      Particle& p = swarm[i];
      if (scores[i] > p.best_score) {
        p.best_score = scores[i];
        p.best_position = p.position;
      }
      if (scores[i] > best_score) {
        best_score = scores[i];
        global_best = p.position;
      }
    }
    result.objective_history.push_back(best_score);
  }
  result.best_placement = Decode(global_best);
  result.best_objective = best_score;
  return result;
}

PlacementResult OptimizePlacement(const RoomSpec& room,
                                  std::span<const ReferencePoint> rps, int k,
                                  const NeighborhoodSpec& spec,
                                  const PathLossParams& params,
                                  const PsoConfig& config) {
  room.Validate();
  spec.Validate();
  params.Validate();
  auto objective = [&](const Placement& placement) {
    try {
      return PlacementObjective(placement, rps, spec, params);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDomain) throw;
      return kCoincidencePenalty;
    }
  };
  return PsoOptimize(objective, {{0.0, 0.0}, {room.width, room.length}}, k,
                     config);
}

}  // namespace ips
