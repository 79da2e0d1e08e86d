#include "ips/evaluation.h"

#include <algorithm>
#include <cmath>

#include "ips/error.h"

namespace ips {

double EuclideanError(const Point2& predicted, const Point2& truth) {
  if (!std::isfinite(predicted.x) || !std::isfinite(predicted.y) ||
      !std::isfinite(truth.x) || !std::isfinite(truth.y)) {
    throw Error(ErrorKind::kDomain, "non-finite coordinate in error metric");
  }
  return Distance(predicted, truth);
}

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void Summarize(EvalReport& report) {
  std::vector<double> errors;
  report.excluded = 0;
  for (const PointResult& p : report.points) {
    if (p.predicted) {
      errors.push_back(p.error);
    } else {
      ++report.excluded;
    }
  }
  double sum = 0.0;
  for (double e : errors) sum += e;
  report.mean_error = errors.empty() ? 0.0 : sum / static_cast<double>(errors.size());
  report.median_error = Percentile(errors, 0.5);
  report.p90_error = Percentile(errors, 0.9);
  std::sort(errors.begin(), errors.end());
  report.cdf.clear();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    report.cdf.push_back(
        {errors[i], static_cast<double>(i + 1) / static_cast<double>(errors.size())});
  }
}

EvalReport Evaluate(const Predictor& predictor, std::span<const Observation> tests,
                    const std::optional<RoomSpec>& room) {
  if (tests.empty()) throw Error(ErrorKind::kInvalidConfig, "test set is empty");
  EvalReport report;
  report.points.reserve(tests.size());
  for (const Observation& t : tests) {
    PointResult r;
    r.location_id = t.location_id;
    r.truth = t.truth;
    try {
      const Point2 p = predictor(t.fingerprint);
      r.error = EuclideanError(p, t.truth);
      r.predicted = p;
      if (room && (p.x < -1.0 || p.x > room->width + 1.0 || p.y < -1.0 ||
                   p.y > room->length + 1.0)) {
        ++report.out_of_bounds;
      }
    } catch (const Error& e) {
      r.failure = e.what();
    }
    report.points.push_back(std::move(r));
  }
  Summarize(report);
  return report;
}

Point2 NearestFingerprintBaseline(const Fingerprint& query,
                                  std::span<const ReferencePoint> radio_map) {
  if (radio_map.empty()) throw Error(ErrorKind::kInvalidConfig, "radio map is empty");
  const ReferencePoint* best = nullptr;
  double best_d = 0.0;
  for (const ReferencePoint& rp : radio_map) {
    const double d = FingerprintDistance(query, rp.fingerprint);
    if (best == nullptr || d < best_d || (d == best_d && rp.id < best->id)) {
      best = &rp;
      best_d = d;
    }
  }
  return best->position;
}

}  // namespace ips
