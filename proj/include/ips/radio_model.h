#ifndef IPS_RADIO_MODEL_H_
#define IPS_RADIO_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ips {

// Log-distance path loss: rssi(d) = rssi0 - 10 * alpha * log10(d / d0).
struct PathLossParams {
  double rssi0 = -40.0;  // dBm at d0
  double d0 = 1.0;       // m
  double alpha = 2.5;

  void Validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double Distance(const Point2& a, const Point2& b);

// Axis-aligned room [0, width] x [0, length]. `width` runs along x and
// `length` along y. The reference-point grid has grid_rows rows stacked
// along y and grid_cols columns along x.
struct RoomSpec {
  double width = 7.0;
  double length = 4.0;
  int grid_rows = 3;
  int grid_cols = 6;
  double margin = 0.5;

  void Validate() const;
  bool Contains(const Point2& p) const;
  // Grid pitch along x and y; zero along an axis with a single line of RPs.
  double SpacingX() const;
  double SpacingY() const;
};

// RSSI vector, entry l belongs to the source with id l.
struct Fingerprint {
  std::vector<double> rssi;

  std::size_t size() const { return rssi.size(); }
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct ReferencePoint {
  int id = 0;
  Point2 position;
  Fingerprint fingerprint;
  std::optional<int> zone;
};

// Signal source coordinates ordered by source id.
struct Placement {
  std::vector<Point2> sources;

  std::size_t size() const { return sources.size(); }
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct RssiSample {
  std::int64_t timestamp_ms = 0;
  int source_id = 0;
  double rssi = 0.0;

  friend bool operator==(const RssiSample&, const RssiSample&) = default;
};

double PredictRssi(const PathLossParams& params, double distance);

// Euclidean distance between two fingerprints in dB space.
double FingerprintDistance(const Fingerprint& a, const Fingerprint& b);

// Evenly spaced RPs with `margin` clearance from the walls, ids in row-major
// order (row index along y, column index along x). A single row or column
// sits on the room's center line.
std::vector<ReferencePoint> BuildRpGrid(const RoomSpec& room);

// Noiseless fingerprint of one location.
Fingerprint PredictFingerprint(const Placement& placement, const Point2& at,
                               const PathLossParams& params);

// Assigns every RP a fingerprint from the path-loss model plus i.i.d.
// Gaussian shadowing (std `noise_sigma` dB). Draws are consumed RP by RP,
// source by source; noise_sigma == 0 consumes no draws.
std::vector<ReferencePoint> SynthesizeRadioMap(
    const Placement& placement, std::span<const ReferencePoint> rps,
    const PathLossParams& params, double noise_sigma, std::uint64_t seed);

struct TraceOptions {
  int samples_per_point = 50;
  std::int64_t scan_period_ms = 100;
};

// For each path point, `samples_per_point` scans; each scan emits one sample
// per source (ascending id) at the same timestamp. Scan n of the whole trace
// is stamped n * scan_period_ms.
std::vector<RssiSample> GenerateTrace(const Placement& placement,
                                      std::span<const Point2> path,
                                      const PathLossParams& params,
                                      double noise_sigma,
                                      const TraceOptions& options,
                                      std::uint64_t seed);

}  // namespace ips

#endif  // IPS_RADIO_MODEL_H_
