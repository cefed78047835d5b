#ifndef DCS_NN_HPP_
#define DCS_NN_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dcs/common.hpp"

namespace dcs {

struct NetShape {
  int inputs = 0;
  std::vector<int> hidden = {128, 128};
  int actions = 6;

  bool operator==(const NetShape&) const = default;
};

std::size_t param_count(const NetShape& shape);

// Policy/value network: a rectifier trunk over the flattened observation with
// a logits head and a scalar value head. Parameters live in one flat vector;
// each layer stores its weights input-major (fan_in rows of fan_out) followed
// by its biases, in the order trunk..., policy head, value head.
class DenseNet {
 public:
  struct Layer {
    std::size_t weights;  // offset of the fan_in x fan_out block
    std::size_t biases;   // offset of the fan_out biases
    int fan_in;
    int fan_out;
  };

  // Activations kept from a forward pass for the backward pass.
  struct Cache {
    std::vector<int> active;            // indices of non-zero inputs
    std::vector<double> active_values;  // their values
    std::vector<std::vector<double>> hidden;  // post-rectifier activations
    std::vector<double> logits;
    double value = 0.0;
  };

  DenseNet() = default;
  // All parameters zero.
  explicit DenseNet(NetShape shape);

  // Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the
  // policy head is further scaled by 0.01 so the initial policy is close to
  // uniform. Biases start at zero.
  static DenseNet init(const NetShape& shape, std::uint64_t seed);

  const NetShape& shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& policy_head() const { return layers_[layers_.size() - 2]; }
  const Layer& value_head() const { return layers_.back(); }

  // Throws UsageError if x.size() != shape().inputs.
  void forward(std::span<const double> x, Cache& cache) const;

  // Accumulates d(loss)/d(theta) into grad given the loss gradient with
  // respect to the logits and the value of one forward pass.
  void backward(const Cache& cache, std::span<const double> dlogits, double dvalue,
                std::span<double> grad) const;

 private:
  NetShape shape_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

void softmax(std::span<const double> logits, std::span<double> probs);
void log_softmax(std::span<const double> logits, std::span<double> out);
double entropy(std::span<const double> logits);

struct ActionSample {
  int action;
  double log_prob;
};
ActionSample sample_action(std::span<const double> logits, Rng& rng);

// One transition's training target. advantage and ret are constants with
// respect to the parameters.
struct A2cTarget {
  int action = 0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct LossCoefficients {
  double value = 0.5;
  double entropy = 0.01;
  bool operator==(const LossCoefficients&) const = default;
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;   // mean of -log pi(a) * advantage
  double value = 0.0;    // mean of (R - V)^2
  double entropy = 0.0;  // mean policy entropy
};

// Batch-mean A2C loss: policy + value_coef * value - entropy_coef * entropy.
// When grad is non-empty the exact gradient is accumulated into it.
LossStats a2c_loss(const DenseNet& net, std::span<const DenseNet::Cache> caches,
                   std::span<const A2cTarget> targets, const LossCoefficients& coef,
                   std::span<double> grad = {});

// Same loss evaluated from raw observations.
LossStats a2c_loss(const DenseNet& net, std::span<const std::vector<double>> observations,
                   std::span<const A2cTarget> targets, const LossCoefficients& coef,
                   std::span<double> grad = {});

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

// Compares the analytic gradient against central differences (step 1e-5) on
// up to max_coordinates randomly chosen parameters. The relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport grad_check(const DenseNet& net,
                           std::span<const std::vector<double>> observations,
                           std::span<const A2cTarget> targets,
                           const LossCoefficients& coef, double tolerance,
                           std::uint64_t seed, std::size_t max_coordinates = 200);

struct RmsPropConfig {
  double learning_rate = 7e-4;
  double decay = 0.99;
  double epsilon = 1e-5;
  double max_grad_norm = 0.5;

  bool operator==(const RmsPropConfig&) const = default;
};

// Rescales g in place so its L2 norm is at most max_norm. Returns the norm
// before clipping.
double clip_global_norm(std::span<double> g, double max_norm);

class RmsProp {
 public:
  RmsProp(std::size_t parameters, RmsPropConfig config = {});

  // Clips grad to the global norm, then
  //   ms = decay * ms + (1 - decay) * g^2;  theta -= lr * g / (sqrt(ms) + eps)
  void update(DenseNet& net, std::span<double> grad);

  const RmsPropConfig& config() const { return config_; }
  std::span<const double> mean_square() const { return mean_square_; }
  long steps() const { return steps_; }

 private:
  RmsPropConfig config_;
  std::vector<double> mean_square_;
  long steps_ = 0;
};

// Snapshot file: 16-byte header (magic "DCSP", uint32 version, uint64
// parameter count), then the parameters as little-endian IEEE doubles.
void save_params(const std::filesystem::path& path, std::span<const double> params);
// Throws FormatError on a bad header, truncation or trailing bytes.
std::vector<double> load_params(const std::filesystem::path& path);

}  // namespace dcs

#endif  // DCS_NN_HPP_
