#include "ips/radio_model.h"

#include <cmath>
#include <random>
#include <string>

#include "ips/error.h"

namespace ips {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kOrdering: return "ordering";
    case ErrorKind::kOptimization: return "optimization";
    case ErrorKind::kTraining: return "training";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kInvalidConfig: return "invalid-config";
  }
  return "unknown";
}

void PathLossParams::Validate() const {
  if (!(d0 > 0.0) || !std::isfinite(d0)) {
    throw Error(ErrorKind::kInvalidConfig, "path loss d0 must be > 0");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::kInvalidConfig, "path loss alpha must be > 0");
  }
  if (!std::isfinite(rssi0)) {
    throw Error(ErrorKind::kInvalidConfig, "path loss rssi0 must be finite");
  }
}

double Distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

void ValidateAxis(double extent, int count, double margin, const char* name) {
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw Error(ErrorKind::kInvalidConfig,
                std::string("room ") + name + " must be > 0");
  }
  if (count < 1) {
    throw Error(ErrorKind::kInvalidConfig,
                std::string("grid count along ") + name + " must be >= 1");
  }
  if (count > 1 && !(2.0 * margin < extent)) {
    throw Error(ErrorKind::kInvalidConfig,
                std::string("margin leaves no room along ") + name);
  }
}

// Coordinate of grid line `i` out of `count` along an axis.
double GridCoordinate(double extent, int count, double margin, int i) {
  if (count == 1) return 0.5 * extent;
  return margin + i * (extent - 2.0 * margin) / (count - 1);
}

double GridPitch(double extent, int count, double margin) {
  if (count == 1) return 0.0;
  return (extent - 2.0 * margin) / (count - 1);
}

}  // namespace

void RoomSpec::Validate() const {
  if (!(margin >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "room margin must be >= 0");
  }
  ValidateAxis(width, grid_cols, margin, "width");
  ValidateAxis(length, grid_rows, margin, "length");
}

bool RoomSpec::Contains(const Point2& p) const {
  return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= length;
}

double RoomSpec::SpacingX() const { return GridPitch(width, grid_cols, margin); }
double RoomSpec::SpacingY() const {
  return GridPitch(length, grid_rows, margin);
}

double PredictRssi(const PathLossParams& params, double distance) {
  if (!(distance > 0.0)) {
    throw Error(ErrorKind::kDomain,
                "path loss needs a positive distance, got " +
                    std::to_string(distance));
  }
  return params.rssi0 - 10.0 * params.alpha * std::log10(distance / params.d0);
}

double FingerprintDistance(const Fingerprint& a, const Fingerprint& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShape,
                "fingerprint lengths differ: " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const double diff = a.rssi[l] - b.rssi[l];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

std::vector<ReferencePoint> BuildRpGrid(const RoomSpec& room) {
  room.Validate();
  std::vector<ReferencePoint> rps;
  rps.reserve(static_cast<std::size_t>(room.grid_rows) * room.grid_cols);
  for (int row = 0; row < room.grid_rows; ++row) {
    const double y = GridCoordinate(room.length, room.grid_rows, room.margin, row);
    for (int col = 0; col < room.grid_cols; ++col) {
      ReferencePoint rp;
      rp.id = static_cast<int>(rps.size());
      rp.position = {GridCoordinate(room.width, room.grid_cols, room.margin, col), y};
      rps.push_back(std::move(rp));
    }
  }
  return rps;
}

Fingerprint PredictFingerprint(const Placement& placement, const Point2& at,
                               const PathLossParams& params) {
  Fingerprint fp;
  fp.rssi.reserve(placement.size());
  for (std::size_t l = 0; l < placement.size(); ++l) {
    const double d = Distance(at, placement.sources[l]);
    if (!(d > 0.0)) {
      throw Error(ErrorKind::kDomain,
                  "location (" + std::to_string(at.x) + ", " +
                      std::to_string(at.y) + ") coincides with source " +
                      std::to_string(l));
    }
    fp.rssi.push_back(PredictRssi(params, d));
  }
  return fp;
}

std::vector<ReferencePoint> SynthesizeRadioMap(
    const Placement& placement, std::span<const ReferencePoint> rps,
    const PathLossParams& params, double noise_sigma, std::uint64_t seed) {
  params.Validate();
  if (placement.size() == 0) {
    throw Error(ErrorKind::kInvalidConfig, "placement has no sources");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "noise_sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shadowing(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  std::vector<ReferencePoint> out(rps.begin(), rps.end());
  for (ReferencePoint& rp : out) {
    rp.fingerprint = PredictFingerprint(placement, rp.position, params);
    if (noise_sigma > 0.0) {
      for (double& v : rp.fingerprint.rssi) v += shadowing(rng);
    }
  }
  return out;
}

std::vector<RssiSample> GenerateTrace(const Placement& placement,
                                      std::span<const Point2> path,
                                      const PathLossParams& params,
                                      double noise_sigma,
                                      const TraceOptions& options,
                                      std::uint64_t seed) {
  params.Validate();
  if (options.samples_per_point < 1) {
    throw Error(ErrorKind::kInvalidConfig, "samples_per_point must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "noise_sigma must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shadowing(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  std::vector<RssiSample> trace;
  trace.reserve(path.size() * options.samples_per_point * placement.size());
  std::int64_t scan = 0;
  for (const Point2& at : path) {
    const Fingerprint mean = PredictFingerprint(placement, at, params);
    for (int s = 0; s < options.samples_per_point; ++s, ++scan) {
      for (std::size_t l = 0; l < mean.size(); ++l) {
        double rssi = mean.rssi[l];
        if (noise_sigma > 0.0) rssi += shadowing(rng);
        trace.push_back({scan * options.scan_period_ms, static_cast<int>(l), rssi});
      }
    }
  }
  return trace;
}

}  // namespace ips
