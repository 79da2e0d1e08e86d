#ifndef IPS_EVALUATION_H_
#define IPS_EVALUATION_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ips/position_net.h"
#include "ips/radio_model.h"
#include "ips/zone_classifier.h"

namespace ips {

double EuclideanError(const Point2& predicted, const Point2& truth);

// A fingerprint observed at a known location.
struct Observation {
  int location_id = 0;
  Point2 truth;
  Fingerprint fingerprint;
};

struct PointResult {
  int location_id = 0;
  Point2 truth;
  std::optional<Point2> predicted;  // unset when prediction failed
  double error = 0.0;
  std::string failure;
};

struct CdfSample {
  double error = 0.0;
  double fraction = 0.0;
};

struct EvalReport {
  std::vector<PointResult> points;
  double mean_error = 0.0;
  double median_error = 0.0;
  double p90_error = 0.0;
  std::vector<CdfSample> cdf;
  std::size_t excluded = 0;
  // Predictions outside the room grown by 1 m; diagnostic only.
  std::size_t out_of_bounds = 0;
};

// Linear interpolation between order statistics (q in [0, 1]).
double Percentile(std::vector<double> values, double q);

using Predictor = std::function<Point2(const Fingerprint&)>;

// Runs `predictor` on every test point. Points whose prediction throws are
// kept in the list, flagged, and left out of the summary statistics.
EvalReport Evaluate(const Predictor& predictor, std::span<const Observation> tests,
                    const std::optional<RoomSpec>& room = std::nullopt);

// Recomputes mean, median, p90 and CDF from the accepted per-point errors.
void Summarize(EvalReport& report);

// Coordinates of the RP whose fingerprint is closest to `query`; ties go to
// the lower id.
Point2 NearestFingerprintBaseline(const Fingerprint& query,
                                  std::span<const ReferencePoint> radio_map);

}  // namespace ips

#endif  // IPS_EVALUATION_H_
