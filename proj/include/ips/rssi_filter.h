#ifndef IPS_RSSI_FILTER_H_
#define IPS_RSSI_FILTER_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ips/radio_model.h"

namespace ips {

struct KalmanParams {
  double process_noise = 0.008;     // pn, dBm^2
  double measurement_noise = 1.0;   // mn, dBm^2
  // Unset means: seed the state with the first measurement of the stream.
  std::optional<double> init_state;
  double init_cov = 1.0;            // dBm^2

  void Validate() const;
};

struct KalmanState {
  double s = 0.0;  // estimate, dBm
  double c = 0.0;  // covariance, dBm^2
};

struct KalmanStepResult {
  KalmanState state;
  double gain = 0.0;
  bool accepted = true;  // false: measurement rejected, state unchanged
};

// Readings beyond this magnitude are treated as corrupt.
inline constexpr double kMaxAbsRssi = 200.0;

// One predict/update cycle of the random-walk scalar filter.
KalmanStepResult KalmanStep(const KalmanState& state, double measurement,
                            const KalmanParams& params);

// Positive root of c = (c + pn) * mn / (c + pn + mn).
double SteadyStateCovariance(const KalmanParams& params);

struct FilteredSample {
  RssiSample raw;
  double filtered = 0.0;
  bool accepted = true;
};

struct FilteredTrace {
  std::vector<FilteredSample> samples;
  std::size_t dropped = 0;
};

// Runs one independent filter per source id. Output has one entry per input
// sample, stably ordered by (timestamp, source id). Rejected readings keep
// the last estimate of their stream (NaN before the stream has one) and are
// counted in `dropped`.
FilteredTrace FilterTrace(std::span<const RssiSample> trace,
                          const KalmanParams& params);

// CSV with header `timestamp_ms,source_id,rssi_dbm`.
std::vector<RssiSample> ReadTraceCsv(std::istream& in);
void WriteTraceCsv(std::ostream& out, std::span<const RssiSample> trace);
// Same columns plus `rssi_filtered_dbm`.
void WriteFilteredCsv(std::ostream& out, const FilteredTrace& trace);

// Throws ErrorKind::kOrdering if any source's timestamps decrease.
void CheckPerSourceOrder(std::span<const RssiSample> trace);

}  // namespace ips

#endif  // IPS_RSSI_FILTER_H_
