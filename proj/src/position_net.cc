#include "ips/position_net.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "ips/error.h"
#include "ips/seed.h"

namespace ips {

namespace {

constexpr std::array<const char*, 4> kGateNames = {"input", "forget", "output",
                                                   "candidate"};

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd SequenceOf(const Fingerprint& fp) {
  Eigen::MatrixXd seq(1, static_cast<Eigen::Index>(fp.size()));
  for (std::size_t t = 0; t < fp.size(); ++t) seq(0, t) = fp.rssi[t];
  return seq;
}

// Activations of one forward pass, kept for backpropagation.
struct ForwardCache {
  // Column t holds the value at timestep t; cell/hidden carry an extra
  // leading column for the zero initial state.
  std::array<Eigen::MatrixXd, 4> gates;
  Eigen::MatrixXd cell;
  Eigen::MatrixXd hidden;
  Eigen::VectorXd dense_pre;
  Eigen::VectorXd dense_out;
  Eigen::Vector2d output;
};

ForwardCache RunForward(const NetworkWeights& w, const Eigen::MatrixXd& seq) {
  const Eigen::Index hidden = w.lstm.gates[0].bias.size();
  const Eigen::Index steps = seq.cols();
  if (seq.rows() != w.lstm.gates[0].kernel.cols()) {
    throw Error(ErrorKind::kShape,
                "sequence has " + std::to_string(seq.rows()) +
                    " features, network expects " +
                    std::to_string(w.lstm.gates[0].kernel.cols()));
  }
  ForwardCache cache;
  for (auto& g : cache.gates) g.resize(hidden, steps);
  cache.cell = Eigen::MatrixXd::Zero(hidden, steps + 1);
  cache.hidden = Eigen::MatrixXd::Zero(hidden, steps + 1);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto x = seq.col(t);
    const auto h_prev = cache.hidden.col(t);
    for (int g = 0; g < 4; ++g) {
      const LstmGateWeights& gw = w.lstm.gates[g];
      Eigen::VectorXd pre = gw.kernel * x + gw.recurrent * h_prev + gw.bias;
      if (g == kCandidateGate) {
        cache.gates[g].col(t) = pre.array().tanh();
      } else {
        cache.gates[g].col(t) = pre.unaryExpr(&Sigmoid);
      }
    }
    cache.cell.col(t + 1) =
        cache.gates[kForgetGate].col(t).cwiseProduct(cache.cell.col(t)) +
        cache.gates[kInputGate].col(t).cwiseProduct(cache.gates[kCandidateGate].col(t));
    cache.hidden.col(t + 1) = cache.gates[kOutputGate].col(t).cwiseProduct(
        cache.cell.col(t + 1).array().tanh().matrix());
  }
  cache.dense_pre = w.dense.hidden_kernel * cache.hidden.col(steps) + w.dense.hidden_bias;
  cache.dense_out = cache.dense_pre.cwiseMax(0.0);
  cache.output = w.dense.output_kernel * cache.dense_out + w.dense.output_bias;
  return cache;
}

void CheckBatch(const Batch& batch) {
  if (batch.sequences.size() != batch.targets.size()) {
    throw Error(ErrorKind::kShape, "batch has " +
                                       std::to_string(batch.sequences.size()) +
                                       " inputs but " +
                                       std::to_string(batch.targets.size()) +
                                       " targets");
  }
  if (batch.sequences.empty()) throw Error(ErrorKind::kShape, "empty batch");
}

std::string ParameterDiagnostics(NetworkWeights w) {
  std::ostringstream os;
  for (const TensorView& t : w.Tensors()) {
    double max_abs = 0.0;
    bool finite = true;
    for (double v : t.values()) {
      finite = finite && std::isfinite(v);
      max_abs = std::max(max_abs, std::abs(v));
    }
    os << ' ' << t.name << (finite ? "" : "(non-finite)") << " max|w|=" << max_abs;
  }
  return os.str();
}

}  // namespace

void NetworkShape::Validate() const {
  if (input_features < 1 || hidden < 1 || dense < 1) {
    throw Error(ErrorKind::kInvalidConfig, "network dimensions must be >= 1");
  }
}

NetworkWeights NetworkWeights::Zeros(const NetworkShape& shape) {
  shape.Validate();
  NetworkWeights w;
  for (LstmGateWeights& g : w.lstm.gates) {
    g.kernel = Eigen::MatrixXd::Zero(shape.hidden, shape.input_features);
    g.recurrent = Eigen::MatrixXd::Zero(shape.hidden, shape.hidden);
    g.bias = Eigen::VectorXd::Zero(shape.hidden);
  }
  w.dense.hidden_kernel = Eigen::MatrixXd::Zero(shape.dense, shape.hidden);
  w.dense.hidden_bias = Eigen::VectorXd::Zero(shape.dense);
  w.dense.output_kernel = Eigen::MatrixXd::Zero(kOutputDim, shape.dense);
  w.dense.output_bias = Eigen::VectorXd::Zero(kOutputDim);
  return w;
}

NetworkShape NetworkWeights::shape() const {
  return {static_cast<int>(lstm.gates[0].kernel.cols()),
          static_cast<int>(lstm.gates[0].bias.size()),
          static_cast<int>(dense.hidden_bias.size())};
}

std::vector<TensorView> NetworkWeights::Tensors() {
  std::vector<TensorView> out;
  for (int g = 0; g < 4; ++g) {
    LstmGateWeights& gw = lstm.gates[g];
    const std::string prefix = std::string("lstm.") + kGateNames[g];
    out.push_back({prefix + ".kernel", gw.kernel.data(), gw.kernel.rows(), gw.kernel.cols()});
    out.push_back({prefix + ".recurrent", gw.recurrent.data(), gw.recurrent.rows(),
                   gw.recurrent.cols()});
    out.push_back({prefix + ".bias", gw.bias.data(), gw.bias.size(), 1});
  }
  out.push_back({"dense.hidden.kernel", dense.hidden_kernel.data(),
                 dense.hidden_kernel.rows(), dense.hidden_kernel.cols()});
  out.push_back({"dense.hidden.bias", dense.hidden_bias.data(), dense.hidden_bias.size(), 1});
  out.push_back({"dense.output.kernel", dense.output_kernel.data(),
                 dense.output_kernel.rows(), dense.output_kernel.cols()});
  out.push_back({"dense.output.bias", dense.output_bias.data(), dense.output_bias.size(), 1});
  return out;
}

std::size_t NetworkWeights::ParameterCount() const {
  std::size_t n = 0;
  for (const LstmGateWeights& g : lstm.gates) {
    n += g.kernel.size() + g.recurrent.size() + g.bias.size();
  }
  return n + dense.hidden_kernel.size() + dense.hidden_bias.size() +
         dense.output_kernel.size() + dense.output_bias.size();
}

Fingerprint Normalization::Normalize(const Fingerprint& fp) const {
  if (fp.size() != rssi_mean.size()) {
    throw Error(ErrorKind::kShape, "fingerprint has " + std::to_string(fp.size()) +
                                       " sources, model expects " +
                                       std::to_string(rssi_mean.size()));
  }
  Fingerprint out = fp;
  for (std::size_t l = 0; l < fp.size(); ++l) {
    out.rssi[l] = (fp.rssi[l] - rssi_mean[l]) / rssi_scale[l];
  }
  return out;
}

Fingerprint Normalization::Denormalize(const Fingerprint& fp) const {
  if (fp.size() != rssi_mean.size()) {
    throw Error(ErrorKind::kShape, "fingerprint length mismatch");
  }
  Fingerprint out = fp;
  for (std::size_t l = 0; l < fp.size(); ++l) {
    out.rssi[l] = fp.rssi[l] * rssi_scale[l] + rssi_mean[l];
  }
  return out;
}

Point2 Normalization::NormalizePosition(const Point2& p) const {
  return {(p.x - position_mean.x) / position_scale.x,
          (p.y - position_mean.y) / position_scale.y};
}

Point2 Normalization::DenormalizePosition(const Point2& p) const {
  return {p.x * position_scale.x + position_mean.x,
          p.y * position_scale.y + position_mean.y};
}

Normalization FitNormalization(std::span<const TrainingSample> samples) {
  if (samples.empty()) throw Error(ErrorKind::kTraining, "no samples to normalize");
  const std::size_t k = samples.front().fingerprint.size();
  const double n = static_cast<double>(samples.size());
  auto scale_of = [](double var) {
    const double sd = std::sqrt(std::max(var, 0.0));
    return sd > 1e-12 ? sd : 1.0;
  };
  Normalization norm;
  norm.rssi_mean.assign(k, 0.0);
  norm.rssi_scale.assign(k, 0.0);
  for (const TrainingSample& s : samples) {
    if (s.fingerprint.size() != k) {
      throw Error(ErrorKind::kShape, "training fingerprints differ in length");
    }
    for (std::size_t l = 0; l < k; ++l) norm.rssi_mean[l] += s.fingerprint.rssi[l] / n;
    norm.position_mean.x += s.position.x / n;
    norm.position_mean.y += s.position.y / n;
  }
  Point2 pos_var;
  for (const TrainingSample& s : samples) {
    for (std::size_t l = 0; l < k; ++l) {
      const double d = s.fingerprint.rssi[l] - norm.rssi_mean[l];
      norm.rssi_scale[l] += d * d / n;
    }
    pos_var.x += (s.position.x - norm.position_mean.x) * (s.position.x - norm.position_mean.x) / n;
    pos_var.y += (s.position.y - norm.position_mean.y) * (s.position.y - norm.position_mean.y) / n;
  }
  for (double& v : norm.rssi_scale) v = scale_of(v);
  norm.position_scale = {scale_of(pos_var.x), scale_of(pos_var.y)};
  return norm;
}

Eigen::Vector2d NetworkForward(const NetworkWeights& weights,
                               const Eigen::MatrixXd& sequence) {
  return RunForward(weights, sequence).output;
}

Eigen::VectorXd LstmFinalHidden(const NetworkWeights& weights,
                                const Eigen::MatrixXd& sequence) {
  ForwardCache cache = RunForward(weights, sequence);
  return cache.hidden.col(cache.hidden.cols() - 1);
}

Point2 ModelForward(const Fingerprint& fp, const NetworkWeights& weights,
                    const Normalization& norm) {
  const Eigen::Vector2d out = NetworkForward(weights, SequenceOf(norm.Normalize(fp)));
  return norm.DenormalizePosition({out.x(), out.y()});
}

double MseLoss(std::span<const Eigen::Vector2d> predicted,
               std::span<const Eigen::Vector2d> target) {
  if (predicted.size() != target.size() || predicted.empty()) {
    throw Error(ErrorKind::kShape, "MSE needs equal, non-empty batches");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    sum += (predicted[i] - target[i]).squaredNorm();
  }
  return sum / (kOutputDim * static_cast<double>(predicted.size()));
}

double BatchLoss(const NetworkWeights& weights, const Batch& batch) {
  CheckBatch(batch);
  std::vector<Eigen::Vector2d> pred;
  pred.reserve(batch.sequences.size());
  for (const Eigen::MatrixXd& seq : batch.sequences) {
    pred.push_back(NetworkForward(weights, seq));
  }
  return MseLoss(pred, batch.targets);
}

Gradients Backward(const NetworkWeights& w, const Batch& batch) {
  CheckBatch(batch);
  Gradients out;
  out.grads = NetworkWeights::Zeros(w.shape());
  NetworkWeights& g = out.grads;
  const double n = static_cast<double>(batch.sequences.size());

  for (std::size_t b = 0; b < batch.sequences.size(); ++b) {
    const Eigen::MatrixXd& seq = batch.sequences[b];
    const ForwardCache cache = RunForward(w, seq);
    if (!cache.output.allFinite()) {
      throw Error(ErrorKind::kTraining,
                  "non-finite network output; parameters:" + ParameterDiagnostics(w));
    }
    const Eigen::Vector2d err = cache.output - batch.targets[b];
    out.loss += err.squaredNorm() / (kOutputDim * n);

    // d loss / d output for loss = sum(err^2) / (2n)
    const Eigen::Vector2d d_out = err / n;
    g.dense.output_kernel += d_out * cache.dense_out.transpose();
    g.dense.output_bias += d_out;
    Eigen::VectorXd d_pre = w.dense.output_kernel.transpose() * d_out;
    for (Eigen::Index j = 0; j < d_pre.size(); ++j) {
      if (cache.dense_pre(j) <= 0.0) d_pre(j) = 0.0;
    }
    const Eigen::Index steps = seq.cols();
    g.dense.hidden_kernel += d_pre * cache.hidden.col(steps).transpose();
    g.dense.hidden_bias += d_pre;

    Eigen::VectorXd d_h = w.dense.hidden_kernel.transpose() * d_pre;
    Eigen::VectorXd d_c = Eigen::VectorXd::Zero(d_h.size());
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const auto i_t = cache.gates[kInputGate].col(t).array();
      const auto f_t = cache.gates[kForgetGate].col(t).array();
      const auto o_t = cache.gates[kOutputGate].col(t).array();
      const auto g_t = cache.gates[kCandidateGate].col(t).array();
      const Eigen::ArrayXd tanh_c = cache.cell.col(t + 1).array().tanh();
      const auto c_prev = cache.cell.col(t).array();

      d_c.array() += d_h.array() * o_t * (1.0 - tanh_c.square());
      std::array<Eigen::VectorXd, 4> d_gate_pre;
      d_gate_pre[kOutputGate] = (d_h.array() * tanh_c * o_t * (1.0 - o_t)).matrix();
      d_gate_pre[kInputGate] = (d_c.array() * g_t * i_t * (1.0 - i_t)).matrix();
      d_gate_pre[kForgetGate] = (d_c.array() * c_prev * f_t * (1.0 - f_t)).matrix();
      d_gate_pre[kCandidateGate] = (d_c.array() * i_t * (1.0 - g_t.square())).matrix();

      Eigen::VectorXd d_h_prev = Eigen::VectorXd::Zero(d_h.size());
      for (int gate = 0; gate < 4; ++gate) {
        const Eigen::VectorXd& d = d_gate_pre[gate];
        g.lstm.gates[gate].kernel += d * seq.col(t).transpose();
        g.lstm.gates[gate].recurrent += d * cache.hidden.col(t).transpose();
        g.lstm.gates[gate].bias += d;
        d_h_prev += w.lstm.gates[gate].recurrent.transpose() * d;
      }
      d_c = (d_c.array() * f_t).matrix();
      d_h = d_h_prev;
    }
  }
  return out;
}

void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::kShape, "Adam: " + std::to_string(params.size()) +
                                       " parameters but " +
                                       std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorKind::kShape, "Adam moments do not match parameter count");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double m_correction = 1.0 - std::pow(config.beta1, t);
  const double v_correction = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / m_correction;
    const double v_hat = state.v[i] / v_correction;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void AdamStep(NetworkWeights& params, NetworkWeights& grads, AdamState& state,
              const AdamConfig& config) {
  // Gather into flat buffers so the moments line up with a fixed order.
  std::vector<double> p, g;
  p.reserve(params.ParameterCount());
  g.reserve(params.ParameterCount());
  const std::vector<TensorView> pt = params.Tensors();
  const std::vector<TensorView> gt = grads.Tensors();
  if (pt.size() != gt.size()) throw Error(ErrorKind::kShape, "gradient layout mismatch");
  for (std::size_t i = 0; i < pt.size(); ++i) {
    if (pt[i].rows != gt[i].rows || pt[i].cols != gt[i].cols) {
      throw Error(ErrorKind::kShape, "gradient shape mismatch for " + pt[i].name);
    }
    p.insert(p.end(), pt[i].values().begin(), pt[i].values().end());
    g.insert(g.end(), gt[i].values().begin(), gt[i].values().end());
  }
  AdamStep(p, g, state, config);
  std::size_t offset = 0;
  for (const TensorView& t : pt) {
    std::copy_n(p.begin() + offset, t.size(), t.data);
    offset += t.size();
  }
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw Error(ErrorKind::kInvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidConfig, "batch_size must be >= 1");
  shape.Validate();
  if (!(adam.lr > 0.0) || !(adam.epsilon > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "invalid Adam hyperparameters");
  }
}

NetworkWeights InitWeights(const NetworkShape& shape, std::uint64_t seed) {
  NetworkWeights w = NetworkWeights::Zeros(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& m) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  for (LstmGateWeights& g : w.lstm.gates) {
    fill(g.kernel);
    fill(g.recurrent);
  }
  w.lstm.gates[kForgetGate].bias.setOnes();
  fill(w.dense.hidden_kernel);
  fill(w.dense.output_kernel);
  return w;
}

ZoneModel TrainZone(std::span<const TrainingSample> samples,
                    const TrainConfig& config, std::uint64_t seed) {
  config.Validate();
  if (samples.empty()) throw Error(ErrorKind::kTraining, "zone has no training samples");
  ZoneModel model;
  model.norm = FitNormalization(samples);
  model.weights = InitWeights(config.shape, seed);

  Batch all;
  all.sequences.reserve(samples.size());
  all.targets.reserve(samples.size());
  for (const TrainingSample& s : samples) {
    all.sequences.push_back(SequenceOf(model.norm.Normalize(s.fingerprint)));
    const Point2 t = model.norm.NormalizePosition(s.position);
    all.targets.emplace_back(t.x, t.y);
  }

  // Shuffles draw from their own stream so they do not depend on the
  // number of values consumed by initialization.
  std::mt19937_64 shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  AdamState adam;
  model.loss_history.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Batch batch;
      for (std::size_t i = start; i < end; ++i) {
        batch.sequences.push_back(all.sequences[order[i]]);
        batch.targets.push_back(all.targets[order[i]]);
      }
      Gradients grads = Backward(model.weights, batch);
      AdamStep(model.weights, grads.grads, adam, config.adam);
    }
    model.loss_history.push_back(BatchLoss(model.weights, all));
  }
  return model;
}

PositionModel Train(const std::map<int, std::vector<TrainingSample>>& dataset,
                    const TrainConfig& config) {
  config.Validate();
  if (dataset.empty()) throw Error(ErrorKind::kTraining, "training dataset is empty");
  for (const auto& [zone, samples] : dataset) {
    if (samples.empty()) {
      throw Error(ErrorKind::kTraining,
                  "zone " + std::to_string(zone) + " has no training samples");
    }
  }
  PositionModel model;
  model.config = config;
  if (config.single_model) {
    std::vector<TrainingSample> pooled;
    for (const auto& [zone, samples] : dataset) {
      pooled.insert(pooled.end(), samples.begin(), samples.end());
    }
    model.zones.emplace(0, TrainZone(pooled, config, DeriveSeed(config.seed, 0)));
    return model;
  }
  std::vector<std::pair<int, std::future<ZoneModel>>> jobs;
  for (const auto& [zone, samples] : dataset) {
    const std::vector<TrainingSample>* data = &samples;
    const std::uint64_t seed = DeriveSeed(config.seed, static_cast<std::uint64_t>(zone));
    jobs.emplace_back(zone, std::async(std::launch::async, [data, &config, seed] {
                        return TrainZone(*data, config, seed);
                      }));
  }
  for (auto& [zone, job] : jobs) {
    try {
      model.zones.emplace(zone, job.get());
    } catch (const Error& e) {
      throw Error(e.kind(), "zone " + std::to_string(zone) + ": " + e.what());
    }
  }
  return model;
}

Point2 Predict(const Fingerprint& fp, const PositionModel& model,
               std::span<const LabeledFingerprint> db, const KnnConfig& knn) {
  if (model.zones.empty()) throw Error(ErrorKind::kNotFound, "model has no zones");
  if (model.config.single_model) {
    const ZoneModel& zm = model.zones.begin()->second;
    return ModelForward(fp, zm.weights, zm.norm);
  }
  const int zone = KnnClassify(fp, db, knn);
  const auto it = model.zones.find(zone);
  if (it == model.zones.end()) {
    throw Error(ErrorKind::kNotFound, "no trained model for zone " + std::to_string(zone));
  }
  return ModelForward(fp, it->second.weights, it->second.norm);
}

}  // namespace ips
