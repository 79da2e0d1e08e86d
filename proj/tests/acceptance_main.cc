// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ips/error.h"
#include "ips/experiment.h"
#include "ips/placement_opt.h"
#include "ips/position_net.h"
#include "ips/radio_model.h"
#include "ips/rssi_filter.h"
#include "ips/serialization.h"
#include "ips/zone_classifier.h"
#include "test_oracles.h"

namespace {

using namespace ips;

// Tolerances and frozen values.
constexpr double kKalmanStepTol = 1e-4;
constexpr double kSteadyStateTol = 1e-9;
constexpr int kSteadyStateSteps = 10000;
constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kPsoFraction = 0.95;
constexpr double kObjectiveRelTol = 1e-9;
constexpr double kDefaultPlacementObjective = 900.5148100095909;
constexpr int kKnnQueries = 1000;
constexpr int kKnnDbSize = 50;
constexpr int kFilterSamples = 500;
constexpr double kFilterSigma = 2.0;
constexpr double kEndToEndBound = 1.0;
// First reference run measured 0.7902 m; regressions past this bound fail.
constexpr double kEndToEndRegressionBound = 0.85;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome KalmanOracle() {
  KalmanParams p;
  p.process_noise = 0.01;
  p.measurement_noise = 1.0;
  const KalmanStepResult r = KalmanStep({-50.0, 1.0}, -48.0, p);
  // Hand recursion: c- = 1.01, K = 1.01 / 2.01.
  const double s_want = -48.995024875621894;
  const double c_want = 0.5024875621890547;
  const double step_err = std::max(std::abs(r.state.s - s_want), std::abs(r.state.c - c_want));

  KalmanParams d;
  KalmanState st{0.0, d.init_cov};
  for (int i = 0; i < kSteadyStateSteps; ++i) st = KalmanStep(st, -60.0, d).state;
  const double pn = d.process_noise, mn = d.measurement_noise;
  const double c_inf = (-pn + std::sqrt(pn * pn + 4.0 * pn * mn)) / 2.0;
  const double ss_err = std::abs(st.c - c_inf);
  return {step_err <= kKalmanStepTol && ss_err <= kSteadyStateTol &&
              std::abs(SteadyStateCovariance(d) - c_inf) <= kSteadyStateTol,
          "step err " + Fmt("%.2e", step_err) + ", steady-state err " + Fmt("%.2e", ss_err)};
}

Outcome GradientCheck() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  NetworkWeights w = InitWeights({1, 4, 16}, 7);
  Batch batch;
  for (int b = 0; b < 2; ++b) {
    Eigen::MatrixXd s(1, 3);
    for (int t = 0; t < 3; ++t) s(0, t) = n(rng);
    batch.sequences.push_back(s);
    batch.targets.emplace_back(n(rng), n(rng));
  }
  Gradients g = Backward(w, batch);
  std::vector<TensorView> params = w.Tensors();
  std::vector<TensorView> grads = g.grads.Tensors();
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t t = 0; t < params.size(); ++t) {
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      double& p = params[t].data[i];
      const double saved = p;
      p = saved + kFdStep;
      const double up = BatchLoss(w, batch);
      p = saved - kFdStep;
      const double down = BatchLoss(w, batch);
      p = saved;
      const double numeric = (up - down) / (2.0 * kFdStep);
      const double a = grads[t].data[i];
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-12});
    const double rel = std::sqrt(diff_sq) / denom;
    if (rel > worst) {
      worst = rel;
      worst_name = params[t].name;
    }
  }
  return {worst < kGradRelTol,
          std::to_string(params.size()) + " tensors, worst rel err " + Fmt("%.2e", worst) +
              " (" + worst_name + ")"};
}

Outcome PsoVsBruteForce() {
  const RoomSpec room;
  const auto rps = BuildRpGrid(room);
  const NeighborhoodSpec spec = DefaultNeighborhood(room);
  const PathLossParams pl;
  std::vector<Point2> cands;
  for (double x : {0.0, 1.75, 3.5, 5.25, 7.0}) {
    for (double y : {0.0, 1.0, 2.0, 3.0, 4.0}) cands.push_back({x, y});
  }
  auto snap = [&](const Point2& p) {
    return *std::min_element(cands.begin(), cands.end(), [&](const Point2& a, const Point2& b) {
      return Distance(a, p) < Distance(b, p);
    });
  };
  double best = -1.0;
  for (const Point2& a : cands) {
    for (const Point2& b : cands) {
      best = std::max(best, PlacementObjective({{a, b}}, rps, spec, pl));
    }
  }
  const PlacementResult r = PsoOptimize(
      [&](const Placement& p) {
        return PlacementObjective({{snap(p.sources[0]), snap(p.sources[1])}}, rps, spec, pl);
      },
      {{0.0, 0.0}, {room.width, room.length}}, 2, PsoConfig{});
  const double frac = r.best_objective / best;
  return {frac >= kPsoFraction, "PSO " + Fmt("%.6g", r.best_objective) + " / exhaustive " +
                                    Fmt("%.6g", best) + " = " + Fmt("%.4f", frac)};
}

Outcome DefaultPlacementBound() {
  const RoomSpec room;
  const auto rps = BuildRpGrid(room);
  const NeighborhoodSpec spec = DefaultNeighborhood(room);
  const PathLossParams pl;
  const double at_default = PlacementObjective(DefaultPlacement(), rps, spec, pl);
  std::vector<oracle::Xy> src;
  for (const Point2& s : DefaultPlacement().sources) src.push_back({s.x, s.y});
  const double direct = oracle::PlacementObjective(src, oracle::DefaultGrid(), spec.radius,
                                                   pl.rssi0, pl.d0, pl.alpha);
  const double rel = std::max(std::abs(at_default / direct - 1.0),
                              std::abs(at_default / kDefaultPlacementObjective - 1.0));
  const PlacementResult r = OptimizePlacement(room, rps, 3, spec, pl, PsoConfig{});
  return {rel <= kObjectiveRelTol && r.best_objective >= at_default,
          "optimized " + Fmt("%.6g", r.best_objective) + " >= default placement " +
              Fmt("%.10g", at_default) + ", oracle rel err " + Fmt("%.1e", rel)};
}

Outcome KnnOracle() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> dbm(-90.0, -30.0);
  std::uniform_int_distribution<int> zone(0, 5);
  std::vector<LabeledFingerprint> db;
  std::vector<std::vector<double>> fps;
  std::vector<int> ids, zones;
  for (int i = 0; i < kKnnDbSize; ++i) {
    std::vector<double> fp{dbm(rng), dbm(rng), dbm(rng)};
    db.push_back({i, {fp}, zone(rng)});
    fps.push_back(fp);
    ids.push_back(i);
    zones.push_back(db.back().zone);
  }
  int agree = 0;
  for (int q = 0; q < kKnnQueries; ++q) {
    std::vector<double> query{dbm(rng), dbm(rng), dbm(rng)};
    agree += KnnClassify({query}, db, {3}) == oracle::KnnBySort(query, fps, ids, zones, 3);
  }
  int self = 0;
  for (const LabeledFingerprint& e : db) self += KnnClassify(e.fingerprint, db, {1}) == e.zone;
  return {agree == kKnnQueries && self == kKnnDbSize,
          std::to_string(agree) + "/" + std::to_string(kKnnQueries) + " agree, k=1 self " +
              std::to_string(self) + "/" + std::to_string(kKnnDbSize)};
}

Outcome FilteringBenefit() {
  const double truth = -65.0;
  std::mt19937_64 rng(66);
  std::normal_distribution<double> noise(0.0, kFilterSigma);
  std::vector<RssiSample> trace;
  for (int i = 0; i < kFilterSamples; ++i) trace.push_back({i * 100, 0, truth + noise(rng)});
  const FilteredTrace f = FilterTrace(trace, KalmanParams{});
  double raw = 0.0, filtered = 0.0;
  for (const FilteredSample& s : f.samples) {
    raw += (s.raw.rssi - truth) * (s.raw.rssi - truth);
    filtered += (s.filtered - truth) * (s.filtered - truth);
  }
  raw /= kFilterSamples;
  filtered /= kFilterSamples;
  return {filtered < raw, "raw MSE " + Fmt("%.4f", raw) + ", filtered MSE " +
                              Fmt("%.4f", filtered)};
}

Outcome EndToEnd() {
  const ExperimentResult r = RunExperiment(ReferenceConfig());
  const double m = r.report.mean_error, b = r.baseline.mean_error;
  return {r.report.excluded == 0 && m < b && m < kEndToEndBound && m < kEndToEndRegressionBound,
          "model mean " + Fmt("%.4f", m) + " m, baseline " + Fmt("%.4f", b) + " m, excluded " +
              std::to_string(r.report.excluded)};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism() {
  const ExperimentConfig c = ReferenceConfig();
  const auto root = std::filesystem::temp_directory_path() / "ips_acceptance_determinism";
  std::filesystem::remove_all(root);
  WriteArtifacts(RunExperiment(c), c, root / "a");
  WriteArtifacts(RunExperiment(c), c, root / "b");
  const std::string a = Slurp(root / "a" / "report.json");
  const std::string b = Slurp(root / "b" / "report.json");
  std::filesystem::remove_all(root);
  return {!a.empty() && a == b, "report.json " + std::to_string(a.size()) + " bytes, " +
                                    (a == b ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Kalman oracle and steady state", KalmanOracle},
      {"LSTM/dense gradient check", GradientCheck},
      {"PSO vs brute force on 5x5 grid", PsoVsBruteForce},
      {"default placement lower bound", DefaultPlacementBound},
      {"KNN oracle", KnnOracle},
      {"filtering benefit", FilteringBenefit},
      {"end-to-end benchmark", EndToEnd},
      {"determinism", Determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
