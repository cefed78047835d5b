#include "dcs/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace dcs {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'S', 'P'};
constexpr std::uint32_t kSnapshotVersion = 1;

std::vector<DenseNet::Layer> plan_layers(const NetShape& shape) {
  std::vector<DenseNet::Layer> layers;
  std::size_t offset = 0;
  auto add = [&](int fan_in, int fan_out) {
    DenseNet::Layer l{offset, offset + static_cast<std::size_t>(fan_in) * fan_out,
                      fan_in, fan_out};
    offset = l.biases + static_cast<std::size_t>(fan_out);
    layers.push_back(l);
  };
  int fan_in = shape.inputs;
  for (int h : shape.hidden) {
    add(fan_in, h);
    fan_in = h;
  }
  add(fan_in, shape.actions);
  add(fan_in, 1);
  return layers;
}

// out += x * row, over a contiguous row of n weights.
inline void axpy(double x, const double* row, double* out, int n) {
  for (int o = 0; o < n; ++o) out[o] += x * row[o];
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int o = 0; o < n; ++o) s += a[o] * b[o];
  return s;
}

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

std::uint64_t get_le(const unsigned char* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::size_t param_count(const NetShape& shape) {
  const auto layers = plan_layers(shape);
  return layers.back().biases + static_cast<std::size_t>(layers.back().fan_out);
}

DenseNet::DenseNet(NetShape shape) : shape_(std::move(shape)) {
  if (shape_.inputs < 1 || shape_.actions < 1)
    throw UsageError("DenseNet: inputs and actions must be positive");
  for (int h : shape_.hidden)
    if (h < 1) throw UsageError("DenseNet: hidden sizes must be positive");
  layers_ = plan_layers(shape_);
  params_.assign(dcs::param_count(shape_), 0.0);
}

DenseNet DenseNet::init(const NetShape& shape, std::uint64_t seed) {
  DenseNet net(shape);
  Rng rng(mix_seed(seed, 0x11e7));
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const Layer& layer = net.layers_[l];
    double scale = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    if (l + 2 == net.layers_.size()) scale *= 0.01;
    for (std::size_t i = layer.weights; i < layer.biases; ++i)
      net.params_[i] = (2.0 * uniform01(rng) - 1.0) * scale;
  }
  return net;
}

void DenseNet::forward(std::span<const double> x, Cache& cache) const {
  if (x.size() != static_cast<std::size_t>(shape_.inputs))
    throw UsageError("forward: observation has " + std::to_string(x.size()) +
                     " values, network expects " + std::to_string(shape_.inputs));
  cache.active.clear();
  cache.active_values.clear();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      cache.active.push_back(static_cast<int>(i));
      cache.active_values.push_back(x[i]);
    }
  }
  const double* p = params_.data();
  const std::size_t trunk = shape_.hidden.size();
  cache.hidden.resize(trunk);

  // Output of `layer` given the previous activations (sparse input for the
  // first layer, dense rectified activations afterwards).
  auto affine = [&](const Layer& layer, std::size_t depth, double* out) {
    std::copy_n(p + layer.biases, layer.fan_out, out);
    if (depth == 0) {
      for (std::size_t k = 0; k < cache.active.size(); ++k)
        axpy(cache.active_values[k],
             p + layer.weights + static_cast<std::size_t>(cache.active[k]) * layer.fan_out,
             out, layer.fan_out);
    } else {
      const std::vector<double>& in = cache.hidden[depth - 1];
      for (int j = 0; j < layer.fan_in; ++j)
        if (in[j] != 0.0)
          axpy(in[j], p + layer.weights + static_cast<std::size_t>(j) * layer.fan_out, out,
               layer.fan_out);
    }
  };

  for (std::size_t l = 0; l < trunk; ++l) {
    std::vector<double>& h = cache.hidden[l];
    h.resize(layers_[l].fan_out);
    affine(layers_[l], l, h.data());
    for (double& v : h) v = v > 0.0 ? v : 0.0;
  }
  cache.logits.resize(shape_.actions);
  affine(policy_head(), trunk, cache.logits.data());
  affine(value_head(), trunk, &cache.value);
}

void DenseNet::backward(const Cache& cache, std::span<const double> dlogits, double dvalue,
                        std::span<double> grad) const {
  const double* p = params_.data();
  double* g = grad.data();
  const std::size_t trunk = shape_.hidden.size();
  const Layer& ph = policy_head();
  const Layer& vh = value_head();

  // Weight gradients of a layer given its output gradient dz.
  auto accumulate = [&](const Layer& layer, std::size_t depth, const double* dz) {
    for (int o = 0; o < layer.fan_out; ++o) g[layer.biases + o] += dz[o];
    if (depth == 0) {
      for (std::size_t k = 0; k < cache.active.size(); ++k)
        axpy(cache.active_values[k], dz,
             g + layer.weights + static_cast<std::size_t>(cache.active[k]) * layer.fan_out,
             layer.fan_out);
    } else {
      const std::vector<double>& in = cache.hidden[depth - 1];
      for (int j = 0; j < layer.fan_in; ++j)
        if (in[j] != 0.0)
          axpy(in[j], dz, g + layer.weights + static_cast<std::size_t>(j) * layer.fan_out,
               layer.fan_out);
    }
  };

  accumulate(ph, trunk, dlogits.data());
  accumulate(vh, trunk, &dvalue);
  if (trunk == 0) return;

  // Gradient with respect to the last trunk activation.
  std::vector<double> da(ph.fan_in), dz;
  for (int j = 0; j < ph.fan_in; ++j) {
    if (cache.hidden[trunk - 1][j] <= 0.0) {
      da[j] = 0.0;
      continue;
    }
    da[j] = dot(p + ph.weights + static_cast<std::size_t>(j) * ph.fan_out, dlogits.data(),
                ph.fan_out) +
            p[vh.weights + j] * dvalue;
  }
  for (std::size_t l = trunk; l-- > 0;) {
    const Layer& layer = layers_[l];
    dz.swap(da);  // dz: gradient at this layer's pre-activation
    accumulate(layer, l, dz.data());
    if (l == 0) break;
    const std::vector<double>& in = cache.hidden[l - 1];
    da.assign(layer.fan_in, 0.0);
    for (int j = 0; j < layer.fan_in; ++j)
      if (in[j] > 0.0)
        da[j] = dot(p + layer.weights + static_cast<std::size_t>(j) * layer.fan_out,
                    dz.data(), layer.fan_out);
  }
}

void softmax(std::span<const double> logits, std::span<double> probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) z += (probs[k] = std::exp(logits[k] - m));
  for (double& v : probs) v /= z;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lz = m + std::log(z);
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lz;
}

double entropy(std::span<const double> logits) {
  std::vector<double> lp(logits.size());
  log_softmax(logits, lp);
  double h = 0.0;
  for (double v : lp) h -= std::exp(v) * v;
  return h;
}

ActionSample sample_action(std::span<const double> logits, Rng& rng) {
  std::vector<double> lp(logits.size());
  log_softmax(logits, lp);
  const double u = uniform01(rng);
  double acc = 0.0;
  int chosen = static_cast<int>(logits.size()) - 1;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    acc += std::exp(lp[k]);
    if (u < acc) {
      chosen = static_cast<int>(k);
      break;
    }
  }
  // Guard against the rounding tail landing on a zero-probability action.
  while (chosen > 0 && !(std::exp(lp[chosen]) > 0.0)) --chosen;
  return {chosen, lp[chosen]};
}

LossStats a2c_loss(const DenseNet& net, std::span<const DenseNet::Cache> caches,
                   std::span<const A2cTarget> targets, const LossCoefficients& coef,
                   std::span<double> grad) {
  if (caches.size() != targets.size()) throw UsageError("a2c_loss: batch size mismatch");
  if (!grad.empty() && grad.size() != net.param_count())
    throw UsageError("a2c_loss: gradient has the wrong size");
  LossStats s;
  const std::size_t n = caches.size();
  if (n == 0) return s;
  const double inv_n = 1.0 / static_cast<double>(n);
  const int actions = net.shape().actions;
  std::vector<double> lp(actions), dlogits(actions);
  for (std::size_t t = 0; t < n; ++t) {
    const DenseNet::Cache& c = caches[t];
    const A2cTarget& tg = targets[t];
    log_softmax(c.logits, lp);
    double h = 0.0;
    for (double v : lp) h -= std::exp(v) * v;
    const double err = tg.ret - c.value;
    s.policy += -lp[tg.action] * tg.advantage;
    s.value += err * err;
    s.entropy += h;
    if (!grad.empty()) {
      for (int k = 0; k < actions; ++k) {
        const double pk = std::exp(lp[k]);
        const double onehot = k == tg.action ? 1.0 : 0.0;
        dlogits[k] = inv_n * (-tg.advantage * (onehot - pk) + coef.entropy * pk * (lp[k] + h));
      }
      const double dvalue = inv_n * 2.0 * coef.value * (c.value - tg.ret);
      net.backward(c, dlogits, dvalue, grad);
    }
  }
  s.policy *= inv_n;
  s.value *= inv_n;
  s.entropy *= inv_n;
  s.total = s.policy + coef.value * s.value - coef.entropy * s.entropy;
  return s;
}

LossStats a2c_loss(const DenseNet& net, std::span<const std::vector<double>> observations,
                   std::span<const A2cTarget> targets, const LossCoefficients& coef,
                   std::span<double> grad) {
  std::vector<DenseNet::Cache> caches(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) net.forward(observations[i], caches[i]);
  return a2c_loss(net, caches, targets, coef, grad);
}

GradCheckReport grad_check(const DenseNet& net,
                           std::span<const std::vector<double>> observations,
                           std::span<const A2cTarget> targets,
                           const LossCoefficients& coef, double tolerance,
                           std::uint64_t seed, std::size_t max_coordinates) {
  constexpr double kStep = 1e-5;
  std::vector<double> analytic(net.param_count(), 0.0);
  a2c_loss(net, observations, targets, coef, analytic);

  std::vector<std::size_t> coords(net.param_count());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x9c));
  const std::size_t k = std::min(max_coordinates, coords.size());
  for (std::size_t i = 0; i < k; ++i)  // partial Fisher-Yates
    std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);
  coords.resize(k);

  DenseNet probe = net;
  GradCheckReport report;
  for (std::size_t c : coords) {
    const double saved = probe.params()[c];
    probe.params()[c] = saved + kStep;
    const double up = a2c_loss(probe, observations, targets, coef).total;
    probe.params()[c] = saved - kStep;
    const double down = a2c_loss(probe, observations, targets, coef).total;
    probe.params()[c] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom = std::max({std::abs(analytic[c]), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic[c] - numeric) / denom;
    if (!(rel <= report.max_relative_error)) report.max_relative_error = rel;
    ++report.coordinates;
  }
  report.passed = tolerance == std::numeric_limits<double>::infinity() ||
                  report.max_relative_error < tolerance;
  return report;
}

double clip_global_norm(std::span<double> g, double max_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& v : g) v *= s;
  }
  return norm;
}

RmsProp::RmsProp(std::size_t parameters, RmsPropConfig config)
    : config_(config), mean_square_(parameters, 0.0) {}

void RmsProp::update(DenseNet& net, std::span<double> grad) {
  if (grad.size() != mean_square_.size() || net.param_count() != mean_square_.size())
    throw UsageError("RmsProp::update: size mismatch");
  clip_global_norm(grad, config_.max_grad_norm);
  std::span<double> theta = net.params();
  const double decay = config_.decay, lr = config_.learning_rate, eps = config_.epsilon;
  double* ms = mean_square_.data();
  const double* g = grad.data();
  double* th = theta.data();
  const std::size_t n = theta.size();
  for (std::size_t i = 0; i < n; ++i) {
    ms[i] = decay * ms[i] + (1.0 - decay) * g[i] * g[i];
    th[i] -= lr * g[i] / (std::sqrt(ms[i]) + eps);
  }
  ++steps_;
}

void save_params(const std::filesystem::path& path, std::span<const double> params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write snapshot " + path.string());
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kSnapshotVersion);
  put_le<std::uint64_t>(os, params.size());
  for (double v : params) put_le<double>(os, v);
  if (!os) throw FormatError("short write on snapshot " + path.string());
}

std::vector<double> load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open snapshot " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("snapshot " + path.string() + ": bad magic");
  if (get_le(bytes.data() + 4, 4) != kSnapshotVersion)
    throw FormatError("snapshot " + path.string() + ": unsupported version");
  const std::uint64_t n = get_le(bytes.data() + 8, 8);
  if (bytes.size() != 16 + n * 8)
    throw FormatError("snapshot " + path.string() + ": size does not match header");
  std::vector<double> params(n);
  for (std::uint64_t i = 0; i < n; ++i)
    params[i] = std::bit_cast<double>(get_le(bytes.data() + 16 + i * 8, 8));
  return params;
}

}  // namespace dcs
