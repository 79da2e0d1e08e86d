#ifndef IPS_POSITION_NET_H_
#define IPS_POSITION_NET_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ips/radio_model.h"
#include "ips/zone_classifier.h"

namespace ips {

inline constexpr int kOutputDim = 2;

struct NetworkShape {
  int input_features = 1;  // features per timestep; one RSSI per source
  int hidden = 32;         // LSTM units
  int dense = 16;          // ReLU layer width

  void Validate() const;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

enum Gate { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidateGate = 3 };

struct LstmGateWeights {
  Eigen::MatrixXd kernel;     // hidden x input_features
  Eigen::MatrixXd recurrent;  // hidden x hidden
  Eigen::VectorXd bias;       // hidden
};

struct LstmWeights {
  std::array<LstmGateWeights, 4> gates;  // indexed by Gate
};

struct DenseWeights {
  Eigen::MatrixXd hidden_kernel;  // dense x hidden, ReLU
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_kernel;  // 2 x dense, linear
  Eigen::VectorXd output_bias;
};

// Mutable view of one parameter tensor, column-major storage.
struct TensorView {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  std::span<double> values() const { return {data, static_cast<std::size_t>(size())}; }
};

struct NetworkWeights {
  LstmWeights lstm;
  DenseWeights dense;

  static NetworkWeights Zeros(const NetworkShape& shape);
  NetworkShape shape() const;

  // Every parameter tensor in a fixed order with a stable name.
  std::vector<TensorView> Tensors();
  std::size_t ParameterCount() const;
};

// Per-source input standardization and per-axis target standardization,
// both estimated on the training set. Zero spread is stored as scale 1.
struct Normalization {
  std::vector<double> rssi_mean;
  std::vector<double> rssi_scale;
  Point2 position_mean;
  Point2 position_scale{1.0, 1.0};

  Fingerprint Normalize(const Fingerprint& fp) const;
  Fingerprint Denormalize(const Fingerprint& fp) const;
  Point2 NormalizePosition(const Point2& p) const;
  Point2 DenormalizePosition(const Point2& p) const;
};

struct TrainingSample {
  Fingerprint fingerprint;
  Point2 position;
};

Normalization FitNormalization(std::span<const TrainingSample> samples);

// Raw network on an already normalized sequence (input_features x steps).
Eigen::Vector2d NetworkForward(const NetworkWeights& weights,
                               const Eigen::MatrixXd& sequence);

// Hidden state after the last timestep.
Eigen::VectorXd LstmFinalHidden(const NetworkWeights& weights,
                                const Eigen::MatrixXd& sequence);

// Normalizes `fp`, feeds it as a length-k sequence of one feature in source
// order and maps the output back to metres.
Point2 ModelForward(const Fingerprint& fp, const NetworkWeights& weights,
                    const Normalization& norm);

// Mean over batch and both coordinates of the squared error.
double MseLoss(std::span<const Eigen::Vector2d> predicted,
               std::span<const Eigen::Vector2d> target);

struct Batch {
  std::vector<Eigen::MatrixXd> sequences;  // normalized inputs
  std::vector<Eigen::Vector2d> targets;    // normalized positions
};

double BatchLoss(const NetworkWeights& weights, const Batch& batch);

struct Gradients {
  NetworkWeights grads;
  double loss = 0.0;
};

// Exact gradient of BatchLoss with respect to every parameter, by
// backpropagation through the unrolled sequence.
Gradients Backward(const NetworkWeights& weights, const Batch& batch);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update of `params` in place.
void AdamStep(std::span<double> params, std::span<const double> grads,
              AdamState& state, const AdamConfig& config);
void AdamStep(NetworkWeights& params, NetworkWeights& grads, AdamState& state,
              const AdamConfig& config);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  NetworkShape shape;
  AdamConfig adam;
  std::uint64_t seed = 2;
  // Train one network on all zones instead of one per zone.
  bool single_model = false;

  void Validate() const;
};

struct ZoneModel {
  NetworkWeights weights;
  Normalization norm;
  std::vector<double> loss_history;  // training-set MSE after each epoch
};

struct PositionModel {
  TrainConfig config;
  std::map<int, ZoneModel> zones;
};

// Uniform +-1/sqrt(fan_in) weights, forget-gate bias 1, other biases 0.
NetworkWeights InitWeights(const NetworkShape& shape, std::uint64_t seed);

ZoneModel TrainZone(std::span<const TrainingSample> samples,
                    const TrainConfig& config, std::uint64_t seed);

// Trains every zone independently (concurrently) with a zone-derived seed.
// In single-model mode all samples train one network stored under zone 0.
PositionModel Train(const std::map<int, std::vector<TrainingSample>>& dataset,
                    const TrainConfig& config);

Point2 Predict(const Fingerprint& fp, const PositionModel& model,
               std::span<const LabeledFingerprint> db, const KnnConfig& knn);

}  // namespace ips

#endif  // IPS_POSITION_NET_H_
