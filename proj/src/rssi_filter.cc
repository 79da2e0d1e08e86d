#include "ips/rssi_filter.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ips/error.h"
#include "ips/text_io.h"

namespace ips {

namespace {

constexpr std::string_view kTraceHeader = "timestamp_ms,source_id,rssi_dbm";

bool Plausible(double rssi) {
  return std::isfinite(rssi) && std::abs(rssi) <= kMaxAbsRssi;
}

}  // namespace

void KalmanParams::Validate() const {
  if (!(process_noise >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "process noise must be >= 0");
  }
  if (!(measurement_noise > 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "measurement noise must be > 0");
  }
  if (!(init_cov >= 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "initial covariance must be >= 0");
  }
  if (init_state && !std::isfinite(*init_state)) {
    throw Error(ErrorKind::kInvalidConfig, "initial state must be finite");
  }
}

KalmanStepResult KalmanStep(const KalmanState& state, double measurement,
                            const KalmanParams& params) {
  if (!Plausible(measurement)) return {state, 0.0, false};
  // Predict: the state is modeled as a random walk.
  const double predicted = state.s;
  const double predicted_cov = state.c + params.process_noise;
  // Update.
  const double gain = predicted_cov / (predicted_cov + params.measurement_noise);
  KalmanStepResult out;
  out.state.s = predicted + gain * (measurement - predicted);
  out.state.c = (1.0 - gain) * predicted_cov;
  out.gain = gain;
  return out;
}

double SteadyStateCovariance(const KalmanParams& params) {
  const double pn = params.process_noise;
  const double mn = params.measurement_noise;
  return 0.5 * (-pn + std::sqrt(pn * pn + 4.0 * pn * mn));
}

void CheckPerSourceOrder(std::span<const RssiSample> trace) {
  std::map<int, std::int64_t> last;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const RssiSample& s = trace[i];
    auto [it, inserted] = last.try_emplace(s.source_id, s.timestamp_ms);
    if (!inserted) {
      if (s.timestamp_ms < it->second) {
        throw Error(ErrorKind::kOrdering,
                    "sample " + std::to_string(i) + " of source " +
                        std::to_string(s.source_id) + " has timestamp " +
                        std::to_string(s.timestamp_ms) + " < " +
                        std::to_string(it->second));
      }
      it->second = s.timestamp_ms;
    }
  }
}

FilteredTrace FilterTrace(std::span<const RssiSample> trace,
                          const KalmanParams& params) {
  params.Validate();
  CheckPerSourceOrder(trace);

  std::map<int, KalmanState> streams;
  FilteredTrace out;
  out.samples.reserve(trace.size());
  for (const RssiSample& sample : trace) {
    FilteredSample fs{sample, std::numeric_limits<double>::quiet_NaN(), true};
    auto it = streams.find(sample.source_id);
    if (!Plausible(sample.rssi)) {
      fs.accepted = false;
      if (it != streams.end()) fs.filtered = it->second.s;
      ++out.dropped;
      out.samples.push_back(fs);
      continue;
    }
    if (it == streams.end()) {
      KalmanState init{params.init_state.value_or(sample.rssi), params.init_cov};
      it = streams.emplace(sample.source_id, init).first;
    }
    it->second = KalmanStep(it->second, sample.rssi, params).state;
    fs.filtered = it->second.s;
    out.samples.push_back(fs);
  }
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const FilteredSample& a, const FilteredSample& b) {
                     if (a.raw.timestamp_ms != b.raw.timestamp_ms) {
                       return a.raw.timestamp_ms < b.raw.timestamp_ms;
                     }
                     return a.raw.source_id < b.raw.source_id;
                   });
  return out;
}

std::vector<RssiSample> ReadTraceCsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<RssiSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = Trim(line);
    if (!have_header) {
      if (row != kTraceHeader) {
        throw LineError(line_no, "expected header '" + std::string(kTraceHeader) +
                                     "', got '" + std::string(row) + "'");
      }
      have_header = true;
      continue;
    }
    if (row.empty()) continue;
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      throw LineError(line_no, "expected 3 comma-separated fields");
    }
    const auto ts = ParseInt(row.substr(0, c1));
    const auto src = ParseInt(row.substr(c1 + 1, c2 - c1 - 1));
    const auto rssi = ParseDouble(row.substr(c2 + 1));
    if (!ts) throw LineError(line_no, "bad timestamp_ms");
    if (!src || *src < 0 || *src > std::numeric_limits<int>::max()) {
      throw LineError(line_no, "bad source_id");
    }
    if (!rssi) throw LineError(line_no, "bad rssi_dbm");
    samples.push_back({*ts, static_cast<int>(*src), *rssi});
  }
  if (!have_header) throw LineError(1, "missing header");
  CheckPerSourceOrder(samples);
  return samples;
}

void WriteTraceCsv(std::ostream& out, std::span<const RssiSample> trace) {
  out << kTraceHeader << '\n';
  for (const RssiSample& s : trace) {
    out << s.timestamp_ms << ',' << s.source_id << ',' << FormatDouble(s.rssi)
        << '\n';
  }
}

void WriteFilteredCsv(std::ostream& out, const FilteredTrace& trace) {
  out << kTraceHeader << ",rssi_filtered_dbm\n";
  for (const FilteredSample& s : trace.samples) {
    out << s.raw.timestamp_ms << ',' << s.raw.source_id << ','
        << FormatDouble(s.raw.rssi) << ',' << FormatDouble(s.filtered) << '\n';
  }
}

}  // namespace ips
