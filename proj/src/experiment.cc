#include "ips/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ips/error.h"
#include "ips/seed.h"
#include "ips/serialization.h"

namespace ips {

namespace {

template <typename F>
auto RunStage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + name + "] " + e.what());
  }
}

std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFormat, "cannot write " + path.string());
  return out;
}

}  // namespace

void ExperimentConfig::Validate() const {
  room.Validate();
  path_loss.Validate();
  if (placement) {
    if (placement->size() == 0) {
      throw Error(ErrorKind::kInvalidConfig, "placement has no sources");
    }
    for (const Point2& p : placement->sources) {
      if (!room.Contains(p)) {
        throw Error(ErrorKind::kInvalidConfig, "placement source outside the room");
      }
    }
  } else {
    if (source_count < 1) throw Error(ErrorKind::kInvalidConfig, "source_count must be >= 1");
    pso.Validate();
  }
  if (neighborhood_radius) Neighborhood().Validate();
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::kInvalidConfig, "noise_sigma must be >= 0");
  if (samples_per_point < 2) {
    throw Error(ErrorKind::kInvalidConfig, "samples_per_point must be >= 2 to split");
  }
  if (scan_period_ms < 1) throw Error(ErrorKind::kInvalidConfig, "scan_period_ms must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "train_fraction must lie in (0, 1)");
  }
  kalman.Validate();
  zones.Validate();
  if (knn.k_neighbors < 1) throw Error(ErrorKind::kInvalidConfig, "k_neighbors must be >= 1");
  train.Validate();
}

NeighborhoodSpec ExperimentConfig::Neighborhood() const {
  return neighborhood_radius ? NeighborhoodSpec{*neighborhood_radius}
                             : DefaultNeighborhood(room);
}

TrainConfig ExperimentConfig::EffectiveTrainConfig() const {
  TrainConfig t = train;
  t.seed = seeds.training;
  return t;
}

Placement DefaultPlacement() { return {{{1.5, 1.5}, {4.0, 2.5}, {7.0, 1.5}}}; }

ExperimentConfig ReferenceConfig() {
  ExperimentConfig config;
  config.placement = DefaultPlacement();
  return config;
}

std::vector<Point2> GridMidpoints(const RoomSpec& room) {
  const std::vector<ReferencePoint> rps = BuildRpGrid(room);
  auto at = [&](int row, int col) { return rps[row * room.grid_cols + col].position; };
  std::vector<Point2> mids;
  for (int row = 0; row < room.grid_rows; ++row) {
    for (int col = 0; col + 1 < room.grid_cols; ++col) {
      const Point2 a = at(row, col), b = at(row, col + 1);
      mids.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
  }
  for (int row = 0; row + 1 < room.grid_rows; ++row) {
    for (int col = 0; col < room.grid_cols; ++col) {
      const Point2 a = at(row, col), b = at(row + 1, col);
      mids.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
  }
  return mids;
}

Survey SimulateSurvey(const ExperimentConfig& config, const Placement& placement) {
  Survey survey;
  for (const ReferencePoint& rp : BuildRpGrid(config.room)) {
    survey.locations.push_back({rp.id, LocationKind::kReferencePoint, rp.position, 0, 0});
  }
  if (config.test_midpoints) {
    int id = static_cast<int>(survey.locations.size());
    for (const Point2& p : GridMidpoints(config.room)) {
      survey.locations.push_back({id++, LocationKind::kMidpoint, p, 0, 0});
    }
  }
  const std::int64_t span = config.samples_per_point * config.scan_period_ms;
  std::vector<Point2> path;
  for (std::size_t n = 0; n < survey.locations.size(); ++n) {
    survey.locations[n].t_begin = static_cast<std::int64_t>(n) * span;
    survey.locations[n].t_end = static_cast<std::int64_t>(n + 1) * span;
    path.push_back(survey.locations[n].position);
  }
  survey.trace = GenerateTrace(placement, path, config.path_loss, config.noise_sigma,
                               {config.samples_per_point, config.scan_period_ms},
                               DeriveSeed(config.seeds.synthesis, 1));
  return survey;
}

FilteredSurvey FilterSurvey(const Survey& survey, const KalmanParams& params,
                            std::size_t source_count) {
  FilteredSurvey out;
  const auto by_time = [](const RssiSample& s, std::int64_t t) { return s.timestamp_ms < t; };
  for (const SurveyLocation& loc : survey.locations) {
    const auto begin = std::lower_bound(survey.trace.begin(), survey.trace.end(),
                                        loc.t_begin, by_time);
    const auto end = std::lower_bound(begin, survey.trace.end(), loc.t_end, by_time);
    const FilteredTrace segment =
        FilterTrace(std::span<const RssiSample>(begin, end), params);
    std::vector<Fingerprint>& scans = out.scans[loc.id];
    for (std::size_t i = 0; i < segment.samples.size();) {
      const std::int64_t t = segment.samples[i].raw.timestamp_ms;
      Fingerprint fp{std::vector<double>(source_count,
                                         std::numeric_limits<double>::quiet_NaN())};
      for (; i < segment.samples.size() && segment.samples[i].raw.timestamp_ms == t; ++i) {
        const FilteredSample& s = segment.samples[i];
        if (s.raw.source_id >= 0 && static_cast<std::size_t>(s.raw.source_id) < source_count) {
          fp.rssi[s.raw.source_id] = s.filtered;
        }
      }
      if (std::all_of(fp.rssi.begin(), fp.rssi.end(), [](double v) { return std::isfinite(v); })) {
        scans.push_back(std::move(fp));
      }
    }
    out.trace.samples.insert(out.trace.samples.end(), segment.samples.begin(),
                             segment.samples.end());
    out.trace.dropped += segment.dropped;
  }
  return out;
}

Dataset SplitSurvey(const Survey& survey, const FilteredSurvey& filtered,
                    double train_fraction, std::uint64_t split_seed) {
  Dataset data;
  for (const SurveyLocation& loc : survey.locations) {
    const auto it = filtered.scans.find(loc.id);
    if (it == filtered.scans.end() || it->second.empty()) continue;
    const std::vector<Fingerprint>& scans = it->second;
    std::vector<std::size_t> order(scans.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(DeriveSeed(split_seed, static_cast<std::uint64_t>(loc.id)));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(scans.size())));
    if (scans.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, scans.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
      Observation obs{loc.id, loc.position, scans[order[i]]};
      if (i < n_train && loc.kind == LocationKind::kReferencePoint) {
        data.train.push_back(std::move(obs));
      } else {
        data.test.push_back(std::move(obs));
      }
    }
  }
  return data;
}

std::vector<ReferencePoint> BuildLabeledDb(std::span<const ReferencePoint> rps,
                                           std::span<const Observation> train,
                                           const RoomSpec& room,
                                           const ZoneGrid& zones) {
  std::vector<ReferencePoint> db(rps.begin(), rps.end());
  for (ReferencePoint& rp : db) {
    std::vector<double> sum;
    std::size_t count = 0;
    for (const Observation& obs : train) {
      if (obs.location_id != rp.id) continue;
      if (sum.empty()) sum.assign(obs.fingerprint.size(), 0.0);
      if (obs.fingerprint.size() != sum.size()) {
        throw Error(ErrorKind::kShape, "training fingerprints differ in length");
      }
      for (std::size_t l = 0; l < sum.size(); ++l) sum[l] += obs.fingerprint.rssi[l];
      ++count;
    }
    if (count == 0) {
      throw Error(ErrorKind::kTraining,
                  "RP " + std::to_string(rp.id) + " has no training fingerprints");
    }
    for (double& v : sum) v /= static_cast<double>(count);
    rp.fingerprint.rssi = std::move(sum);
  }
  return AssignZones(db, room, zones);
}

std::map<int, std::vector<TrainingSample>> ZoneDatasets(
    std::span<const ReferencePoint> db, std::span<const Observation> train) {
  std::map<int, int> zone_of;
  std::map<int, std::vector<TrainingSample>> out;
  for (const ReferencePoint& rp : db) {
    if (!rp.zone) {
      throw Error(ErrorKind::kInvalidConfig, "RP " + std::to_string(rp.id) + " has no zone");
    }
    zone_of[rp.id] = *rp.zone;
    out[*rp.zone];
  }
  for (const Observation& obs : train) {
    const auto it = zone_of.find(obs.location_id);
    if (it == zone_of.end()) continue;
    out[it->second].push_back({obs.fingerprint, obs.truth});
  }
  return out;
}

EvalReport EvaluateModel(const PositionModel& model, std::span<const ReferencePoint> db,
                         std::span<const Observation> test, const KnnConfig& knn,
                         const std::optional<RoomSpec>& room) {
  const std::vector<LabeledFingerprint> labeled = ToLabeledDb(db);
  return Evaluate(
      [&](const Fingerprint& fp) { return Predict(fp, model, labeled, knn); }, test,
      room);
}

EvalReport EvaluateBaseline(std::span<const ReferencePoint> db,
                            std::span<const Observation> test) {
  return Evaluate(
      [&](const Fingerprint& fp) { return NearestFingerprintBaseline(fp, db); }, test);
}

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  RunStage("config", [&] { config.Validate(); return 0; });
  ExperimentResult r;
  const std::vector<ReferencePoint> rps = RunStage("grid", [&] { return BuildRpGrid(config.room); });

  if (config.placement) {
    r.placement = *config.placement;
  } else {
    r.placement_search = RunStage("place", [&] {
      return OptimizePlacement(config.room, rps, config.source_count, config.Neighborhood(),
                               config.path_loss, config.pso);
    });
    r.placement = r.placement_search->best_placement;
  }
  r.radio_map = RunStage("synthesize", [&] {
    return SynthesizeRadioMap(r.placement, rps, config.path_loss, config.noise_sigma,
                              config.seeds.synthesis);
  });
  r.survey = RunStage("simulate", [&] { return SimulateSurvey(config, r.placement); });
  r.filtered = RunStage("filter", [&] {
    return FilterSurvey(r.survey, config.kalman, r.placement.size());
  });
  r.dataset = RunStage("split", [&] {
    return SplitSurvey(r.survey, r.filtered, config.train_fraction, config.seeds.split);
  });
  r.db = RunStage("build-db", [&] {
    return BuildLabeledDb(rps, r.dataset.train, config.room, config.zones);
  });
  r.model = RunStage("train", [&] {
    return Train(ZoneDatasets(r.db, r.dataset.train), config.EffectiveTrainConfig());
  });
  r.report = RunStage("evaluate", [&] {
    return EvaluateModel(r.model, r.db, r.dataset.test, config.knn, config.room);
  });
  r.baseline = RunStage("evaluate", [&] { return EvaluateBaseline(r.db, r.dataset.test); });
  return r;
}

void WriteArtifacts(const ExperimentResult& result, const ExperimentConfig& config,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SeedConfig& seeds = config.seeds;
  WriteJsonFile(dir / "config.json", ToJson(config));
  if (result.placement_search) {
    WriteJsonFile(dir / "placement.json", ToJson(*result.placement_search, config.pso));
  } else {
    WriteJsonFile(dir / "placement.json", ToJson(result.placement));
  }
  WriteJsonFile(dir / "radio_map.json",
                ToJson(RadioMap{config.room, result.placement, config.path_loss,
                                result.radio_map},
                       seeds));
  {
    std::ofstream out = OpenOutput(dir / "survey.csv");
    WriteTraceCsv(out, result.survey.trace);
  }
  WriteJsonFile(dir / "survey_points.json", ToJson(result.survey.locations, seeds));
  {
    std::ofstream out = OpenOutput(dir / "survey_filtered.csv");
    WriteFilteredCsv(out, result.filtered.trace);
  }
  WriteJsonFile(dir / "db.json",
                ToJson(RadioMap{config.room, result.placement, config.path_loss, result.db},
                       seeds));
  WriteJsonFile(dir / "dataset.json", ToJson(result.dataset, seeds));
  WriteJsonFile(dir / "model.json", ToJson(result.model, seeds));
  {
    std::ofstream out = OpenOutput(dir / "loss.csv");
    WriteLossCsv(out, result.model);
  }
  WriteJsonFile(dir / "report.json", ReportToJson(result.report, result.baseline, seeds));
  {
    std::ofstream out = OpenOutput(dir / "scatter.csv");
    WriteScatterCsv(out, result.report);
  }
  {
    std::ofstream out = OpenOutput(dir / "error_cdf.csv");
    WriteCdfCsv(out, result.report);
  }
}

}  // namespace ips
