#include "ips/experiment.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ips/error.h"
#include "ips/serialization.h"

namespace ips {
namespace {

ExperimentConfig QuickConfig() {
  ExperimentConfig c = ReferenceConfig();
  c.samples_per_point = 10;
  c.train.epochs = 15;
  return c;
}

TEST(Survey, LayoutAndTimestamps) {
  const ExperimentConfig c = QuickConfig();
  const Survey s = SimulateSurvey(c, *c.placement);
  // 18 RPs plus 15 horizontal and 12 vertical midpoints.
  ASSERT_EQ(s.locations.size(), 18u + 15u + 12u);
  EXPECT_EQ(s.trace.size(), s.locations.size() * 10 * 3);
  for (std::size_t i = 0; i < s.locations.size(); ++i) {
    const SurveyLocation& loc = s.locations[i];
    EXPECT_EQ(loc.kind, i < 18 ? LocationKind::kReferencePoint : LocationKind::kMidpoint);
    EXPECT_EQ(loc.t_end - loc.t_begin, 10 * c.scan_period_ms);
    if (i > 0) EXPECT_EQ(loc.t_begin, s.locations[i - 1].t_end);
  }
  EXPECT_NO_THROW(CheckPerSourceOrder(s.trace));
}

TEST(Survey, MidpointsAreBetweenNeighbours) {
  const std::vector<Point2> mids = GridMidpoints(RoomSpec{});
  ASSERT_EQ(mids.size(), 27u);
  EXPECT_EQ(mids.front(), (Point2{1.1, 0.5}));
}

TEST(Pipeline, StagesComposeToRunExperiment) {
  const ExperimentConfig c = QuickConfig();
  const ExperimentResult full = RunExperiment(c);

  const Placement& placement = *c.placement;
  const std::vector<ReferencePoint> rps = BuildRpGrid(c.room);
  const Survey survey = SimulateSurvey(c, placement);
  EXPECT_EQ(survey.trace, full.survey.trace);
  const FilteredSurvey filtered = FilterSurvey(survey, c.kalman, placement.size());
  const Dataset data = SplitSurvey(survey, filtered, c.train_fraction, c.seeds.split);
  const std::vector<ReferencePoint> db = BuildLabeledDb(rps, data.train, c.room, c.zones);
  const PositionModel model = Train(ZoneDatasets(db, data.train), c.EffectiveTrainConfig());
  const EvalReport report = EvaluateModel(model, db, data.test, c.knn, c.room);
  EXPECT_EQ(report.mean_error, full.report.mean_error);
  EXPECT_EQ(report.p90_error, full.report.p90_error);
  EXPECT_EQ(EvaluateBaseline(db, data.test).mean_error, full.baseline.mean_error);
}

TEST(Pipeline, SplitKeepsMidpointsOutOfTraining) {
  const ExperimentConfig c = QuickConfig();
  const Survey survey = SimulateSurvey(c, *c.placement);
  const FilteredSurvey filtered = FilterSurvey(survey, c.kalman, 3);
  const Dataset data = SplitSurvey(survey, filtered, 0.8, c.seeds.split);
  EXPECT_EQ(data.train.size(), 18u * 8);
  EXPECT_EQ(data.test.size(), 18u * 2 + 27u * 10);
  for (const Observation& o : data.train) EXPECT_LT(o.location_id, 18);
}

TEST(Pipeline, ReportIsByteIdenticalOnRepeat) {
  const ExperimentConfig c = QuickConfig();
  const ExperimentResult a = RunExperiment(c), b = RunExperiment(c);
  EXPECT_EQ(ReportToJson(a.report, a.baseline, c.seeds).dump(),
            ReportToJson(b.report, b.baseline, c.seeds).dump());
  EXPECT_EQ(ToJson(a.model, c.seeds).dump(), ToJson(b.model, c.seeds).dump());
}

TEST(Pipeline, NoiselessBaselineIsExactOnReferencePoints) {
  ExperimentConfig c = QuickConfig();
  c.noise_sigma = 0.0;
  c.test_midpoints = false;
  const ExperimentResult r = RunExperiment(c);
  EXPECT_EQ(r.baseline.mean_error, 0.0);
  EXPECT_EQ(r.baseline.excluded, 0u);
}

TEST(Pipeline, ErrorsNameTheStage) {
  ExperimentConfig c = QuickConfig();
  c.kalman.measurement_noise = 0.0;
  try {
    RunExperiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("[config]", 0), 0u) << e.what();
  }
  c = QuickConfig();
  c.room.grid_rows = 1;
  c.room.grid_cols = 1;
  c.room.margin = 0.0;
  // The lone RP sits at the room centre; a source placed there is singular.
  c.placement = Placement{{{3.5, 2.0}}};
  try {
    RunExperiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("[synthesize]", 0), 0u) << e.what();
  }
}

TEST(Serialization, ConfigRoundTrip) {
  ExperimentConfig c = ReferenceConfig();
  c.noise_sigma = 1.25;
  c.train.epochs = 7;
  c.seeds.split = 99;
  const Json j = ToJson(c);
  EXPECT_EQ(ToJson(ConfigFromJson(j)).dump(), j.dump());
  ExperimentConfig opt = c;
  opt.placement.reset();
  EXPECT_FALSE(ConfigFromJson(ToJson(opt)).placement.has_value());
}

TEST(Serialization, MissingFieldsTakeDefaults) {
  const ExperimentConfig c = ConfigFromJson(Json::parse(R"({"noise_sigma": 3})"));
  EXPECT_EQ(c.noise_sigma, 3.0);
  EXPECT_EQ(c.samples_per_point, ReferenceConfig().samples_per_point);
  EXPECT_EQ(*c.placement, DefaultPlacement());
}

TEST(Serialization, UnknownFieldIsFormatError) {
  try {
    ConfigFromJson(Json::parse(R"({"kalman": {"proces_noise": 0.1}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("proces_noise"), std::string::npos);
  }
}

TEST(Serialization, ModelRoundTripPredictsIdentically) {
  const ExperimentConfig c = QuickConfig();
  const ExperimentResult r = RunExperiment(c);
  const Json j = ToJson(r.model, c.seeds);
  const PositionModel back = ModelFromJson(Json::parse(j.dump()));
  EXPECT_EQ(ToJson(back, c.seeds).dump(), j.dump());
  const std::vector<LabeledFingerprint> db = ToLabeledDb(r.db);
  for (const Observation& o : r.dataset.test) {
    EXPECT_EQ(Predict(o.fingerprint, back, db, c.knn), Predict(o.fingerprint, r.model, db, c.knn));
  }
}

TEST(Serialization, RadioMapAndDatasetRoundTrip) {
  const ExperimentConfig c = QuickConfig();
  const ExperimentResult r = RunExperiment(c);
  const Json map = ToJson(RadioMap{c.room, r.placement, c.path_loss, r.db}, c.seeds);
  const RadioMap back = RadioMapFromJson(Json::parse(map.dump()));
  EXPECT_EQ(ToJson(back, c.seeds).dump(), map.dump());
  const Json data = ToJson(r.dataset, c.seeds);
  EXPECT_EQ(ToJson(DatasetFromJson(Json::parse(data.dump())), c.seeds).dump(), data.dump());
}

TEST(Artifacts, WritesEveryFile) {
  const ExperimentConfig c = QuickConfig();
  const ExperimentResult r = RunExperiment(c);
  const auto dir = std::filesystem::temp_directory_path() / "ips_artifacts_test";
  std::filesystem::remove_all(dir);
  WriteArtifacts(r, c, dir);
  for (const char* name : {"config.json", "placement.json", "radio_map.json", "survey.csv",
                           "survey_points.json", "survey_filtered.csv", "db.json",
                           "dataset.json", "model.json", "loss.csv", "report.json",
                           "scatter.csv", "error_cdf.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  std::ifstream trace(dir / "survey.csv");
  EXPECT_EQ(ReadTraceCsv(trace), r.survey.trace);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ips
