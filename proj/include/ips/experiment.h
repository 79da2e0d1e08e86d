#ifndef IPS_EXPERIMENT_H_
#define IPS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ips/evaluation.h"
#include "ips/placement_opt.h"
#include "ips/position_net.h"
#include "ips/radio_model.h"
#include "ips/rssi_filter.h"
#include "ips/zone_classifier.h"

namespace ips {

struct SeedConfig {
  std::uint64_t synthesis = 1;
  std::uint64_t training = 2;
  std::uint64_t split = 3;
};

struct ExperimentConfig {
  RoomSpec room;
  PathLossParams path_loss;
  // Unset: solve for the placement with PSO.
  std::optional<Placement> placement;
  int source_count = 3;
  PsoConfig pso;
  // Unset: DefaultNeighborhood(room).
  std::optional<double> neighborhood_radius;
  double noise_sigma = 2.0;
  int samples_per_point = 50;
  std::int64_t scan_period_ms = 100;
  double train_fraction = 0.8;
  bool test_midpoints = true;
  KalmanParams kalman;
  ZoneGrid zones;
  KnnConfig knn;
  TrainConfig train;
  SeedConfig seeds;

  void Validate() const;
  NeighborhoodSpec Neighborhood() const;
  // Training configuration with the training seed applied.
  TrainConfig EffectiveTrainConfig() const;
};

// Two sources at y = 1.5 by the short walls and one at (4, 2.5).
Placement DefaultPlacement();

// Defaults everywhere; the placement above is fixed.
ExperimentConfig ReferenceConfig();

enum class LocationKind { kReferencePoint, kMidpoint };

struct SurveyLocation {
  int id = 0;
  LocationKind kind = LocationKind::kReferencePoint;
  Point2 position;
  // Scans of this location have timestamps in [t_begin, t_end).
  std::int64_t t_begin = 0;
  std::int64_t t_end = 0;
};

struct Survey {
  std::vector<SurveyLocation> locations;
  std::vector<RssiSample> trace;
};

// Midpoints between horizontally and vertically adjacent grid RPs.
std::vector<Point2> GridMidpoints(const RoomSpec& room);

// Stationary survey: `samples_per_point` scans at every RP, then at every
// midpoint when test_midpoints is set. RP locations reuse the RP ids.
Survey SimulateSurvey(const ExperimentConfig& config, const Placement& placement);

struct FilteredSurvey {
  FilteredTrace trace;                                 // all locations
  std::map<int, std::vector<Fingerprint>> scans;       // location id -> scans
};

// Filters each location's segment with freshly initialized per-source
// filters and reassembles one fingerprint per complete scan.
FilteredSurvey FilterSurvey(const Survey& survey, const KalmanParams& params,
                            std::size_t source_count);

struct Dataset {
  std::vector<Observation> train;  // RP locations only
  std::vector<Observation> test;
};

// Per RP location, a seeded shuffle sends `train_fraction` of the scans to
// the training side and the rest to the test side. Every midpoint scan is a
// test scan.
Dataset SplitSurvey(const Survey& survey, const FilteredSurvey& filtered,
                    double train_fraction, std::uint64_t split_seed);

// Radio map of per-RP mean training fingerprints with zone labels.
std::vector<ReferencePoint> BuildLabeledDb(std::span<const ReferencePoint> rps,
                                           std::span<const Observation> train,
                                           const RoomSpec& room,
                                           const ZoneGrid& zones);

std::map<int, std::vector<TrainingSample>> ZoneDatasets(
    std::span<const ReferencePoint> db, std::span<const Observation> train);

EvalReport EvaluateModel(const PositionModel& model,
                         std::span<const ReferencePoint> db,
                         std::span<const Observation> test, const KnnConfig& knn,
                         const std::optional<RoomSpec>& room = std::nullopt);

EvalReport EvaluateBaseline(std::span<const ReferencePoint> db,
                            std::span<const Observation> test);

struct ExperimentResult {
  Placement placement;
  std::optional<PlacementResult> placement_search;
  std::vector<ReferencePoint> radio_map;  // synthesized, at grid RPs
  Survey survey;
  FilteredSurvey filtered;
  Dataset dataset;
  std::vector<ReferencePoint> db;  // labeled, from filtered training scans
  PositionModel model;
  EvalReport report;
  EvalReport baseline;
};

// Errors are rethrown with the failing stage's name prefixed.
ExperimentResult RunExperiment(const ExperimentConfig& config);

void WriteArtifacts(const ExperimentResult& result, const ExperimentConfig& config,
                    const std::filesystem::path& dir);

}  // namespace ips

#endif  // IPS_EXPERIMENT_H_
