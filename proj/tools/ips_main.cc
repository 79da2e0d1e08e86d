#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ips/error.h"
#include "ips/experiment.h"
#include "ips/serialization.h"
#include "ips/text_io.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string dir = ".";
  std::optional<std::uint64_t> seed_synthesis;
  std::optional<std::uint64_t> seed_training;
  std::optional<std::uint64_t> seed_split;
  bool single_model = false;
  std::string in;
  std::string out;
};

// Every failure leaves main as "[stage] cause".
template <typename F>
void Stage(const char* name, F&& f) {
  try {
    f();
  } catch (const ips::Error& e) {
    const std::string what = e.what();
    if (what.rfind("[", 0) == 0) throw;
    throw ips::Error(e.kind(), std::string("[") + name + "] " + what);
  } catch (const std::exception& e) {
    throw ips::Error(ips::ErrorKind::kFormat, std::string("[") + name + "] " + e.what());
  }
}

ips::ExperimentConfig LoadConfig(const Options& o) {
  ips::ExperimentConfig c = ips::ReferenceConfig();
  Stage("config", [&] {
    if (!o.config.empty()) c = ips::ConfigFromJson(ips::ReadJsonFile(o.config));
    if (o.seed_synthesis) c.seeds.synthesis = *o.seed_synthesis;
    if (o.seed_training) c.seeds.training = *o.seed_training;
    if (o.seed_split) c.seeds.split = *o.seed_split;
    if (o.single_model) c.train.single_model = true;
    c.Validate();
  });
  return c;
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ips::Error(ips::ErrorKind::kFormat, "cannot write " + path.string());
  return out;
}

std::ifstream OpenIn(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ips::Error(ips::ErrorKind::kFormat, "cannot open " + path.string());
  return in;
}

void PrintSummary(const ips::EvalReport& model, const ips::EvalReport& baseline) {
  std::cout << "mean_error_m " << ips::FormatDouble(model.mean_error) << "\n"
            << "median_error_m " << ips::FormatDouble(model.median_error) << "\n"
            << "p90_error_m " << ips::FormatDouble(model.p90_error) << "\n"
            << "excluded " << model.excluded << "\n"
            << "baseline_mean_error_m " << ips::FormatDouble(baseline.mean_error) << "\n";
}

void CmdPlace(const Options& o) {
  ips::ExperimentConfig c = LoadConfig(o);
  Stage("place", [&] {
    const auto rps = ips::BuildRpGrid(c.room);
    const ips::PlacementResult r = ips::OptimizePlacement(
        c.room, rps, c.source_count, c.Neighborhood(), c.path_loss, c.pso);
    const fs::path out = o.out.empty() ? fs::path(o.dir) / "placement.json" : fs::path(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    ips::WriteJsonFile(out, ips::ToJson(r, c.pso));
    std::cout << "objective " << ips::FormatDouble(r.best_objective) << "\n";
  });
}

ips::Placement ResolvePlacement(const ips::ExperimentConfig& c, const fs::path& dir) {
  if (fs::exists(dir / "placement.json")) {
    const ips::Json j = ips::ReadJsonFile(dir / "placement.json");
    return ips::PlacementFromJson(j.contains("placement") ? j.at("placement") : j);
  }
  if (!c.placement) {
    throw ips::Error(ips::ErrorKind::kNotFound,
                     "placement is 'optimize' but " + (dir / "placement.json").string() +
                         " is missing; run 'place' first");
  }
  return *c.placement;
}

void CmdSimulate(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const fs::path dir = o.dir;
  Stage("simulate", [&] {
    fs::create_directories(dir);
    const ips::Placement placement = ResolvePlacement(c, dir);
    const auto rps = ips::BuildRpGrid(c.room);
    const auto map =
        ips::SynthesizeRadioMap(placement, rps, c.path_loss, c.noise_sigma, c.seeds.synthesis);
    ips::WriteJsonFile(dir / "radio_map.json",
                       ips::ToJson(ips::RadioMap{c.room, placement, c.path_loss, map}, c.seeds));
    const ips::Survey survey = ips::SimulateSurvey(c, placement);
    std::ofstream out = OpenOut(dir / "survey.csv");
    ips::WriteTraceCsv(out, survey.trace);
    ips::WriteJsonFile(dir / "survey_points.json", ips::ToJson(survey.locations, c.seeds));
  });
}

void CmdFilter(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  Stage("filter", [&] {
    const fs::path in_path = o.in.empty() ? fs::path(o.dir) / "survey.csv" : fs::path(o.in);
    const fs::path out_path =
        o.out.empty() ? fs::path(o.dir) / "trace_filtered.csv" : fs::path(o.out);
    std::ifstream in = OpenIn(in_path);
    const auto trace = ips::ReadTraceCsv(in);
    const ips::FilteredTrace filtered = ips::FilterTrace(trace, c.kalman);
    std::ofstream out = OpenOut(out_path);
    ips::WriteFilteredCsv(out, filtered);
    std::cout << "samples " << filtered.samples.size() << "\n"
              << "dropped " << filtered.dropped << "\n";
  });
}

ips::Survey LoadSurvey(const fs::path& dir) {
  ips::Survey s;
  s.locations = ips::SurveyLocationsFromJson(ips::ReadJsonFile(dir / "survey_points.json"));
  std::ifstream in = OpenIn(dir / "survey.csv");
  s.trace = ips::ReadTraceCsv(in);
  return s;
}

void CmdBuildDb(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const fs::path dir = o.dir;
  ips::RadioMap map;
  ips::Survey survey;
  Stage("load", [&] {
    map = ips::RadioMapFromJson(ips::ReadJsonFile(dir / "radio_map.json"));
    survey = LoadSurvey(dir);
  });
  ips::FilteredSurvey filtered;
  Stage("filter", [&] {
    filtered = ips::FilterSurvey(survey, c.kalman, map.placement.size());
    std::ofstream out = OpenOut(dir / "survey_filtered.csv");
    ips::WriteFilteredCsv(out, filtered.trace);
  });
  ips::Dataset data;
  Stage("split", [&] {
    data = ips::SplitSurvey(survey, filtered, c.train_fraction, c.seeds.split);
    ips::WriteJsonFile(dir / "dataset.json", ips::ToJson(data, c.seeds));
  });
  Stage("build-db", [&] {
    const auto rps = ips::BuildRpGrid(map.room);
    const auto db = ips::BuildLabeledDb(rps, data.train, map.room, c.zones);
    ips::WriteJsonFile(dir / "db.json",
                       ips::ToJson(ips::RadioMap{map.room, map.placement, map.path_loss, db},
                                   c.seeds));
  });
}

void CmdTrain(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const fs::path dir = o.dir;
  ips::RadioMap db;
  ips::Dataset data;
  Stage("load", [&] {
    db = ips::RadioMapFromJson(ips::ReadJsonFile(dir / "db.json"));
    data = ips::DatasetFromJson(ips::ReadJsonFile(dir / "dataset.json"));
  });
  Stage("train", [&] {
    const ips::PositionModel model =
        ips::Train(ips::ZoneDatasets(db.rps, data.train), c.EffectiveTrainConfig());
    ips::WriteJsonFile(dir / "model.json", ips::ToJson(model, c.seeds));
    std::ofstream out = OpenOut(dir / "loss.csv");
    ips::WriteLossCsv(out, model);
  });
}

struct Evaluated {
  ips::EvalReport report;
  ips::EvalReport baseline;
};

Evaluated EvaluateDir(const ips::ExperimentConfig& c, const fs::path& dir) {
  ips::RadioMap db;
  ips::Dataset data;
  ips::PositionModel model;
  Stage("load", [&] {
    db = ips::RadioMapFromJson(ips::ReadJsonFile(dir / "db.json"));
    data = ips::DatasetFromJson(ips::ReadJsonFile(dir / "dataset.json"));
    model = ips::ModelFromJson(ips::ReadJsonFile(dir / "model.json"));
  });
  Evaluated e;
  Stage("evaluate", [&] {
    e.report = ips::EvaluateModel(model, db.rps, data.test, c.knn, db.room);
    e.baseline = ips::EvaluateBaseline(db.rps, data.test);
  });
  return e;
}

void CmdEvaluate(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const Evaluated e = EvaluateDir(c, o.dir);
  Stage("evaluate", [&] {
    ips::WriteJsonFile(fs::path(o.dir) / "report.json",
                       ips::ReportToJson(e.report, e.baseline, c.seeds));
  });
  PrintSummary(e.report, e.baseline);
}

void CmdReport(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const fs::path dir = o.dir;
  const Evaluated e = EvaluateDir(c, dir);
  Stage("report", [&] {
    if (!fs::exists(dir / "survey_filtered.csv")) {
      const ips::Survey survey = LoadSurvey(dir);
      const ips::RadioMap map = ips::RadioMapFromJson(ips::ReadJsonFile(dir / "radio_map.json"));
      const ips::FilteredSurvey f = ips::FilterSurvey(survey, c.kalman, map.placement.size());
      std::ofstream out = OpenOut(dir / "survey_filtered.csv");
      ips::WriteFilteredCsv(out, f.trace);
    }
    std::ofstream scatter = OpenOut(dir / "scatter.csv");
    ips::WriteScatterCsv(scatter, e.report);
    std::ofstream cdf = OpenOut(dir / "error_cdf.csv");
    ips::WriteCdfCsv(cdf, e.report);
  });
}

void CmdRun(const Options& o) {
  const ips::ExperimentConfig c = LoadConfig(o);
  const ips::ExperimentResult r = ips::RunExperiment(c);
  Stage("write", [&] { ips::WriteArtifacts(r, c, o.dir); });
  PrintSummary(r.report, r.baseline);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor positioning pipeline: placement, simulation, filtering, "
               "zone classification, LSTM regression and evaluation."};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "experiment config JSON (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("-d,--dir", o.dir, "artifact directory")->capture_default_str();
    sub->add_option("--seed-synthesis", o.seed_synthesis, "override seeds.synthesis");
    sub->add_option("--seed-training", o.seed_training, "override seeds.training");
    sub->add_option("--seed-split", o.seed_split, "override seeds.split");
    sub->add_flag("--single-model", o.single_model, "train one network for all zones");
  };

  auto* place = app.add_subcommand("place", "optimize source placement -> placement.json");
  common(place);
  place->add_option("-o,--out", o.out, "placement JSON path (default <dir>/placement.json)");
  auto* simulate =
      app.add_subcommand("simulate", "radio map and survey trace -> radio_map.json, survey.csv");
  common(simulate);
  auto* filter = app.add_subcommand("filter", "Kalman-smooth an RSSI trace CSV");
  common(filter);
  filter->add_option("-i,--in", o.in, "input trace CSV (default <dir>/survey.csv)");
  filter->add_option("-o,--out", o.out,
                     "output CSV with filtered column (default <dir>/trace_filtered.csv)");
  auto* build_db =
      app.add_subcommand("build-db", "filter, split and label the survey -> db.json");
  common(build_db);
  auto* train = app.add_subcommand("train", "train zone models -> model.json, loss.csv");
  common(train);
  auto* evaluate = app.add_subcommand("evaluate", "evaluate model and baseline -> report.json");
  common(evaluate);
  auto* report = app.add_subcommand(
      "report", "plot data -> survey_filtered.csv, scatter.csv, error_cdf.csv");
  common(report);
  auto* run = app.add_subcommand("run", "full pipeline from one config, all artifacts");
  common(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*place) CmdPlace(o);
    if (*simulate) CmdSimulate(o);
    if (*filter) CmdFilter(o);
    if (*build_db) CmdBuildDb(o);
    if (*train) CmdTrain(o);
    if (*evaluate) CmdEvaluate(o);
    if (*report) CmdReport(o);
    if (*run) CmdRun(o);
  } catch (const ips::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
