#include "ips/serialization.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ips/error.h"
#include "ips/text_io.h"

namespace ips {

namespace {

// Field access with defaults and unknown-key detection.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) Fail("expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) Fail("unknown field '" + key + "'");
    }
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& At(const std::string& key) {
    if (!Has(key)) Fail("missing field '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (!Has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      Fail("field '" + key + "': " + e.what());
    }
  }

  template <typename T>
  T Require(const std::string& key) {
    T out{};
    if (!Has(key)) Fail("missing field '" + key + "'");
    Get(key, out);
    return out;
  }

  std::string Path(const std::string& key) const { return where_ + "." + key; }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw Error(ErrorKind::kFormat, where_ + ": " + msg);
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json SeedsJson(const SeedConfig& s) {
  return {{"synthesis", s.synthesis}, {"training", s.training}, {"split", s.split}};
}

Json PointJson(const Point2& p) { return Json::array({p.x, p.y}); }

Point2 PointFromJson(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorKind::kFormat, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json RoomJson(const RoomSpec& r) {
  return {{"width", r.width},         {"length", r.length},
          {"grid_rows", r.grid_rows}, {"grid_cols", r.grid_cols},
          {"margin", r.margin}};
}

RoomSpec RoomFromJson(const Json& j) {
  RoomSpec r;
  Reader in(j, "room");
  in.Get("width", r.width);
  in.Get("length", r.length);
  in.Get("grid_rows", r.grid_rows);
  in.Get("grid_cols", r.grid_cols);
  in.Get("margin", r.margin);
  return r;
}

Json PathLossJson(const PathLossParams& p) {
  return {{"rssi0", p.rssi0}, {"d0", p.d0}, {"alpha", p.alpha}};
}

PathLossParams PathLossFromJson(const Json& j) {
  PathLossParams p;
  Reader in(j, "path_loss");
  in.Get("rssi0", p.rssi0);
  in.Get("d0", p.d0);
  in.Get("alpha", p.alpha);
  return p;
}

Json PsoJson(const PsoConfig& c) {
  return {{"swarm_size", c.swarm_size}, {"max_iters", c.max_iters},
          {"inertia", c.inertia},       {"cognitive", c.cognitive},
          {"social", c.social},         {"velocity_clamp", c.velocity_clamp},
          {"seed", c.seed}};
}

PsoConfig PsoFromJson(const Json& j) {
  PsoConfig c;
  Reader in(j, "pso");
  in.Get("swarm_size", c.swarm_size);
  in.Get("max_iters", c.max_iters);
  in.Get("inertia", c.inertia);
  in.Get("cognitive", c.cognitive);
  in.Get("social", c.social);
  in.Get("velocity_clamp", c.velocity_clamp);
  in.Get("seed", c.seed);
  return c;
}

Json KalmanJson(const KalmanParams& k) {
  Json init = k.init_state ? Json(*k.init_state) : Json("first-measurement");
  return {{"process_noise", k.process_noise},
          {"measurement_noise", k.measurement_noise},
          {"init_state", init},
          {"init_cov", k.init_cov}};
}

KalmanParams KalmanFromJson(const Json& j) {
  KalmanParams k;
  Reader in(j, "kalman");
  in.Get("process_noise", k.process_noise);
  in.Get("measurement_noise", k.measurement_noise);
  in.Get("init_cov", k.init_cov);
  if (in.Has("init_state")) {
    const Json& v = in.At("init_state");
    if (v.is_number()) {
      k.init_state = v.get<double>();
    } else if (!(v.is_string() && v.get<std::string>() == "first-measurement")) {
      in.Fail("init_state must be a number or \"first-measurement\"");
    }
  }
  return k;
}

Json TrainJson(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"input_features", t.shape.input_features},
          {"lstm_units", t.shape.hidden},
          {"dense_units", t.shape.dense},
          {"lr", t.adam.lr},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"epsilon", t.adam.epsilon},
          {"single_model", t.single_model}};
}

TrainConfig TrainFromJson(const Json& j) {
  TrainConfig t;
  Reader in(j, "train");
  in.Get("epochs", t.epochs);
  in.Get("batch_size", t.batch_size);
  in.Get("input_features", t.shape.input_features);
  in.Get("lstm_units", t.shape.hidden);
  in.Get("dense_units", t.shape.dense);
  in.Get("lr", t.adam.lr);
  in.Get("beta1", t.adam.beta1);
  in.Get("beta2", t.adam.beta2);
  in.Get("epsilon", t.adam.epsilon);
  in.Get("single_model", t.single_model);
  return t;
}

SeedConfig SeedsFromJson(const Json& j) {
  SeedConfig s;
  Reader in(j, "seeds");
  in.Get("synthesis", s.synthesis);
  in.Get("training", s.training);
  in.Get("split", s.split);
  return s;
}

Json FingerprintJson(const Fingerprint& fp) { return Json(fp.rssi); }

Fingerprint FingerprintFromJson(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::kFormat, where + ": rssi must be an array");
  Fingerprint fp;
  for (const Json& v : j) {
    if (!v.is_number()) throw Error(ErrorKind::kFormat, where + ": rssi entries must be numbers");
    fp.rssi.push_back(v.get<double>());
  }
  return fp;
}

Json ObservationsJson(std::span<const Observation> obs) {
  Json arr = Json::array();
  for (const Observation& o : obs) {
    arr.push_back({{"location_id", o.location_id},
                   {"x", o.truth.x},
                   {"y", o.truth.y},
                   {"rssi", FingerprintJson(o.fingerprint)}});
  }
  return arr;
}

std::vector<Observation> ObservationsFromJson(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::kFormat, where + ": expected an array");
  std::vector<Observation> out;
  for (const Json& e : j) {
    Reader in(e, where);
    Observation o;
    o.location_id = in.Require<int>("location_id");
    o.truth = {in.Require<double>("x"), in.Require<double>("y")};
    o.fingerprint = FingerprintFromJson(in.At("rssi"), where);
    out.push_back(std::move(o));
  }
  return out;
}

Json MatrixJson(const TensorView& t) {
  // Row-major flattening for readability.
  Json data = Json::array();
  for (Eigen::Index r = 0; r < t.rows; ++r) {
    for (Eigen::Index c = 0; c < t.cols; ++c) data.push_back(t.data[c * t.rows + r]);
  }
  return {{"shape", {t.rows, t.cols}}, {"data", data}};
}

Json StatsJson(const PointResult& p) {
  Json j = {{"location_id", p.location_id}, {"truth", PointJson(p.truth)}};
  if (p.predicted) {
    j["predicted"] = PointJson(*p.predicted);
    j["error_m"] = p.error;
  } else {
    j["predicted"] = nullptr;
    j["excluded"] = p.failure;
  }
  return j;
}

Json SummaryJson(const EvalReport& r) {
  return {{"mean_error_m", r.mean_error},
          {"median_error_m", r.median_error},
          {"p90_error_m", r.p90_error},
          {"evaluated", r.points.size() - r.excluded},
          {"excluded", r.excluded},
          {"out_of_bounds", r.out_of_bounds}};
}

}  // namespace

Json ToJson(const ExperimentConfig& c) {
  Json j;
  j["room"] = RoomJson(c.room);
  j["path_loss"] = PathLossJson(c.path_loss);
  j["placement"] = c.placement ? ToJson(*c.placement) : Json("optimize");
  j["source_count"] = c.source_count;
  j["pso"] = PsoJson(c.pso);
  j["neighborhood_radius"] = c.neighborhood_radius ? Json(*c.neighborhood_radius) : Json(nullptr);
  j["noise_sigma"] = c.noise_sigma;
  j["samples_per_point"] = c.samples_per_point;
  j["scan_period_ms"] = c.scan_period_ms;
  j["train_fraction"] = c.train_fraction;
  j["test_midpoints"] = c.test_midpoints;
  j["kalman"] = KalmanJson(c.kalman);
  j["zones"] = {{"rows", c.zones.rows}, {"cols", c.zones.cols}};
  j["knn"] = {{"k_neighbors", c.knn.k_neighbors}};
  j["train"] = TrainJson(c.train);
  j["seeds"] = SeedsJson(c.seeds);
  return j;
}

ExperimentConfig ConfigFromJson(const Json& j) {
  ExperimentConfig c = ReferenceConfig();
  Reader in(j, "config");
  if (in.Has("room")) c.room = RoomFromJson(in.At("room"));
  if (in.Has("path_loss")) c.path_loss = PathLossFromJson(in.At("path_loss"));
  if (in.Has("placement")) {
    const Json& p = in.At("placement");
    if (p.is_string() && p.get<std::string>() == "optimize") {
      c.placement.reset();
    } else {
      c.placement = PlacementFromJson(p);
    }
  }
  in.Get("source_count", c.source_count);
  if (in.Has("pso")) c.pso = PsoFromJson(in.At("pso"));
  if (in.Has("neighborhood_radius")) {
    c.neighborhood_radius = in.Require<double>("neighborhood_radius");
  }
  in.Get("noise_sigma", c.noise_sigma);
  in.Get("samples_per_point", c.samples_per_point);
  in.Get("scan_period_ms", c.scan_period_ms);
  in.Get("train_fraction", c.train_fraction);
  in.Get("test_midpoints", c.test_midpoints);
  if (in.Has("kalman")) c.kalman = KalmanFromJson(in.At("kalman"));
  if (in.Has("zones")) {
    Reader z(in.At("zones"), "zones");
    z.Get("rows", c.zones.rows);
    z.Get("cols", c.zones.cols);
  }
  if (in.Has("knn")) {
    Reader k(in.At("knn"), "knn");
    k.Get("k_neighbors", c.knn.k_neighbors);
  }
  if (in.Has("train")) c.train = TrainFromJson(in.At("train"));
  if (in.Has("seeds")) c.seeds = SeedsFromJson(in.At("seeds"));
  return c;
}

Json ToJson(const Placement& placement) {
  Json sources = Json::array();
  for (std::size_t l = 0; l < placement.size(); ++l) {
    sources.push_back({{"id", l}, {"x", placement.sources[l].x}, {"y", placement.sources[l].y}});
  }
  return {{"sources", sources}};
}

Placement PlacementFromJson(const Json& j) {
  Reader in(j, "placement");
  const Json& sources = in.At("sources");
  if (!sources.is_array()) in.Fail("sources must be an array");
  // Canonical order is ascending source id; ids must be 0..k-1.
  std::map<int, Point2> by_id;
  for (const Json& s : sources) {
    Reader src(s, "placement.sources");
    const int id = src.Require<int>("id");
    if (!by_id.emplace(id, Point2{src.Require<double>("x"), src.Require<double>("y")}).second) {
      in.Fail("duplicate source id " + std::to_string(id));
    }
  }
  Placement p;
  int expected = 0;
  for (const auto& [id, pos] : by_id) {
    if (id != expected++) in.Fail("source ids must be 0..k-1");
    p.sources.push_back(pos);
  }
  return p;
}

Json ToJson(const PlacementResult& result, const PsoConfig& config) {
  Json j = ToJson(result.best_placement);
  j["objective"] = result.best_objective;
  j["history"] = result.objective_history;
  j["pso"] = PsoJson(config);
  return j;
}

Json ToJson(const RadioMap& map, const SeedConfig& seeds) {
  Json rps = Json::array();
  for (const ReferencePoint& rp : map.rps) {
    rps.push_back({{"id", rp.id},
                   {"x", rp.position.x},
                   {"y", rp.position.y},
                   {"zone", rp.zone ? Json(*rp.zone) : Json(nullptr)},
                   {"rssi", FingerprintJson(rp.fingerprint)}});
  }
  return {{"room", RoomJson(map.room)},
          {"placement", ToJson(map.placement)},
          {"path_loss", PathLossJson(map.path_loss)},
          {"seeds", SeedsJson(seeds)},
          {"rps", rps}};
}

RadioMap RadioMapFromJson(const Json& j) {
  RadioMap map;
  Reader in(j, "radio_map");
  map.room = RoomFromJson(in.At("room"));
  map.placement = PlacementFromJson(in.At("placement"));
  map.path_loss = PathLossFromJson(in.At("path_loss"));
  in.Has("seeds");
  std::set<int> ids;
  for (const Json& e : in.At("rps")) {
    Reader rp_in(e, "radio_map.rps");
    ReferencePoint rp;
    rp.id = rp_in.Require<int>("id");
    if (!ids.insert(rp.id).second) rp_in.Fail("duplicate RP id " + std::to_string(rp.id));
    rp.position = {rp_in.Require<double>("x"), rp_in.Require<double>("y")};
    if (rp_in.Has("zone")) rp.zone = rp_in.Require<int>("zone");
    rp.fingerprint = FingerprintFromJson(rp_in.At("rssi"), "radio_map.rps");
    if (!rp.fingerprint.rssi.empty() && rp.fingerprint.size() != map.placement.size()) {
      rp_in.Fail("fingerprint length does not match the placement");
    }
    map.rps.push_back(std::move(rp));
  }
  return map;
}

Json ToJson(std::span<const SurveyLocation> locations, const SeedConfig& seeds) {
  Json arr = Json::array();
  for (const SurveyLocation& l : locations) {
    arr.push_back({{"id", l.id},
                   {"kind", l.kind == LocationKind::kReferencePoint ? "rp" : "midpoint"},
                   {"x", l.position.x},
                   {"y", l.position.y},
                   {"t_begin_ms", l.t_begin},
                   {"t_end_ms", l.t_end}});
  }
  return {{"seeds", SeedsJson(seeds)}, {"locations", arr}};
}

std::vector<SurveyLocation> SurveyLocationsFromJson(const Json& j) {
  Reader in(j, "survey_points");
  in.Has("seeds");
  std::vector<SurveyLocation> out;
  for (const Json& e : in.At("locations")) {
    Reader l(e, "survey_points.locations");
    SurveyLocation loc;
    loc.id = l.Require<int>("id");
    const std::string kind = l.Require<std::string>("kind");
    if (kind == "rp") {
      loc.kind = LocationKind::kReferencePoint;
    } else if (kind == "midpoint") {
      loc.kind = LocationKind::kMidpoint;
    } else {
      l.Fail("unknown location kind '" + kind + "'");
    }
    loc.position = {l.Require<double>("x"), l.Require<double>("y")};
    loc.t_begin = l.Require<std::int64_t>("t_begin_ms");
    loc.t_end = l.Require<std::int64_t>("t_end_ms");
    out.push_back(loc);
  }
  return out;
}

Json ToJson(const Dataset& dataset, const SeedConfig& seeds) {
  return {{"seeds", SeedsJson(seeds)},
          {"train", ObservationsJson(dataset.train)},
          {"test", ObservationsJson(dataset.test)}};
}

Dataset DatasetFromJson(const Json& j) {
  Reader in(j, "dataset");
  in.Has("seeds");
  Dataset d;
  d.train = ObservationsFromJson(in.At("train"), "dataset.train");
  d.test = ObservationsFromJson(in.At("test"), "dataset.test");
  return d;
}

Json ToJson(const PositionModel& model, const SeedConfig& seeds) {
  Json zones = Json::object();
  for (const auto& [zone, zm] : model.zones) {
    NetworkWeights w = zm.weights;
    Json tensors = Json::object();
    for (const TensorView& t : w.Tensors()) tensors[t.name] = MatrixJson(t);
    zones[std::to_string(zone)] = {
        {"tensors", tensors},
        {"normalization",
         {{"rssi_mean", zm.norm.rssi_mean},
          {"rssi_scale", zm.norm.rssi_scale},
          {"position_mean", PointJson(zm.norm.position_mean)},
          {"position_scale", PointJson(zm.norm.position_scale)}}},
        {"loss_history", zm.loss_history}};
  }
  Json train = TrainJson(model.config);
  train["seed"] = model.config.seed;
  return {{"config", train}, {"seeds", SeedsJson(seeds)}, {"zones", zones}};
}

PositionModel ModelFromJson(const Json& j) {
  Reader in(j, "model");
  in.Has("seeds");
  PositionModel model;
  {
    Json cfg = in.At("config");
    std::uint64_t seed = 0;
    if (cfg.contains("seed")) {
      seed = cfg.at("seed").get<std::uint64_t>();
      cfg.erase("seed");
    }
    model.config = TrainFromJson(cfg);
    model.config.seed = seed;
  }
  const Json& zones = in.At("zones");
  if (!zones.is_object()) in.Fail("zones must be an object");
  for (const auto& [key, zj] : zones.items()) {
    const auto zone = ParseInt(key);
    if (!zone) in.Fail("zone key '" + key + "' is not an integer");
    const std::string where = "model.zones." + key;
    Reader z(zj, where);
    ZoneModel zm;
    zm.weights = NetworkWeights::Zeros(model.config.shape);
    const Json& tensors = z.At("tensors");
    for (const TensorView& t : zm.weights.Tensors()) {
      if (!tensors.contains(t.name)) z.Fail("missing tensor " + t.name);
      const Json& tj = tensors.at(t.name);
      const auto shape = tj.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = tj.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != t.rows || shape[1] != t.cols ||
          data.size() != static_cast<std::size_t>(t.size())) {
        throw Error(ErrorKind::kShape, where + ": tensor " + t.name + " has the wrong shape");
      }
      for (Eigen::Index r = 0; r < t.rows; ++r) {
        for (Eigen::Index c = 0; c < t.cols; ++c) t.data[c * t.rows + r] = data[r * t.cols + c];
      }
    }
    if (tensors.size() != zm.weights.Tensors().size()) z.Fail("unexpected extra tensors");
    Reader n(z.At("normalization"), where + ".normalization");
    zm.norm.rssi_mean = n.Require<std::vector<double>>("rssi_mean");
    zm.norm.rssi_scale = n.Require<std::vector<double>>("rssi_scale");
    zm.norm.position_mean = PointFromJson(n.At("position_mean"), where);
    zm.norm.position_scale = PointFromJson(n.At("position_scale"), where);
    if (zm.norm.rssi_mean.size() != zm.norm.rssi_scale.size()) {
      throw Error(ErrorKind::kShape, where + ": normalization lengths differ");
    }
    z.Get("loss_history", zm.loss_history);
    model.zones.emplace(static_cast<int>(*zone), std::move(zm));
  }
  return model;
}

Json ReportToJson(const EvalReport& report, const EvalReport& baseline,
                  const SeedConfig& seeds) {
  Json points = Json::array();
  for (const PointResult& p : report.points) points.push_back(StatsJson(p));
  Json cdf = Json::array();
  for (const CdfSample& s : report.cdf) cdf.push_back({s.error, s.fraction});
  return {{"seeds", SeedsJson(seeds)},
          {"model", SummaryJson(report)},
          {"baseline_nearest_fingerprint", SummaryJson(baseline)},
          {"points", points},
          {"cdf", cdf}};
}

void WriteLossCsv(std::ostream& out, const PositionModel& model) {
  out << "zone,epoch,loss\n";
  for (const auto& [zone, zm] : model.zones) {
    for (std::size_t e = 0; e < zm.loss_history.size(); ++e) {
      out << zone << ',' << e + 1 << ',' << FormatDouble(zm.loss_history[e]) << '\n';
    }
  }
}

void WriteScatterCsv(std::ostream& out, const EvalReport& report) {
  out << "location_id,true_x,true_y,pred_x,pred_y,error_m\n";
  for (const PointResult& p : report.points) {
    if (!p.predicted) continue;
    out << p.location_id << ',' << FormatDouble(p.truth.x) << ',' << FormatDouble(p.truth.y)
        << ',' << FormatDouble(p.predicted->x) << ',' << FormatDouble(p.predicted->y) << ','
        << FormatDouble(p.error) << '\n';
  }
}

void WriteCdfCsv(std::ostream& out, const EvalReport& report) {
  out << "error_m,fraction\n";
  for (const CdfSample& s : report.cdf) {
    out << FormatDouble(s.error) << ',' << FormatDouble(s.fraction) << '\n';
  }
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFormat, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFormat, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ips
