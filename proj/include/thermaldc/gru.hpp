#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "rng.hpp"
#include "telemetry.hpp"

namespace thermaldc::predictor {

using Mat = Eigen::MatrixXd;

/// One gated recurrent layer: update gate z, reset gate r, candidate h̃.
///   z  = σ(Wz x + Uz h + bz)
///   r  = σ(Wr x + Ur h + br)
///   h̃  = tanh(Wh x + Uh (r ⊙ h) + bh)
///   h' = (1 − z) ⊙ h + z ⊙ h̃
struct GruLayer {
  Mat wz, wr, wh; // hidden × input
  Mat uz, ur, uh; // hidden × hidden
  Mat bz, br, bh; // hidden × 1

  GruLayer() = default;
  GruLayer(Eigen::Index input, Eigen::Index hidden)
      : wz(Mat::Zero(hidden, input)), wr(Mat::Zero(hidden, input)), wh(Mat::Zero(hidden, input)),
        uz(Mat::Zero(hidden, hidden)), ur(Mat::Zero(hidden, hidden)), uh(Mat::Zero(hidden, hidden)),
        bz(Mat::Zero(hidden, 1)), br(Mat::Zero(hidden, 1)), bh(Mat::Zero(hidden, 1)) {}

  Eigen::Index input_size() const { return wz.cols(); }
  Eigen::Index hidden_size() const { return wz.rows(); }

  std::array<Mat*, 9> params() { return {&wz, &wr, &wh, &uz, &ur, &uh, &bz, &br, &bh}; }
  std::array<const Mat*, 9> params() const { return {&wz, &wr, &wh, &uz, &ur, &uh, &bz, &br, &bh}; }
};

/// Min/max scaling of the 9 input features and of the target to [0, 1].
struct Normalization {
  Features feat_min{};
  Features feat_max{};
  double target_min = 0.0;
  double target_max = 1.0;

  static double scale(double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.0; }
  static double unscale(double y, double lo, double hi) { return hi > lo ? lo + y * (hi - lo) : lo; }

  double feature(std::size_t k, double x) const { return scale(x, feat_min[k], feat_max[k]); }
  double target(double t) const { return scale(t, target_min, target_max); }
  double denormalize(double y) const { return unscale(y, target_min, target_max); }

  bool operator==(const Normalization&) const = default;
};

struct GruModel {
  std::vector<GruLayer> layers;
  Mat out_w; // 1 × hidden of the last layer
  Mat out_b; // 1 × 1
  Normalization norm;

  std::vector<Mat*> params() {
    std::vector<Mat*> out;
    for (auto& l : layers)
      for (Mat* p : l.params()) out.push_back(p);
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
  }
  std::vector<const Mat*> params() const {
    std::vector<const Mat*> out;
    for (const auto& l : layers)
      for (const Mat* p : l.params()) out.push_back(p);
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
  }

  Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().input_size(); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Mat* p : params()) n += static_cast<std::size_t>(p->size());
    return n;
  }
};

/// Model with the given layer widths (dims[0] = input width) and all
/// parameters zero.
inline GruModel zero_model(const std::vector<Eigen::Index>& dims) {
  if (dims.size() < 2) throw DimensionMismatch("gru: need an input width and at least one layer");
  GruModel m;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i - 1] <= 0) throw DimensionMismatch("gru: layer widths must be > 0");
    m.layers.emplace_back(dims[i - 1], dims[i]);
  }
  m.out_w = Mat::Zero(1, dims.back());
  m.out_b = Mat::Zero(1, 1);
  return m;
}

/// Uniform(−1/√h, 1/√h) parameters per layer, then the update-gate bias is
/// shifted by `update_bias`; zero output bias.
inline GruModel init_model(const std::vector<Eigen::Index>& dims, std::uint64_t seed, double update_bias = 0.0) {
  GruModel m = zero_model(dims);
  Rng rng(seed, Stream::init);
  auto fill = [&](Mat& w, double k) {
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-k, k);
  };
  for (auto& l : m.layers) {
    const double k = 1.0 / std::sqrt(static_cast<double>(l.hidden_size()));
    for (Mat* p : l.params()) fill(*p, k);
    l.bz.array() += update_bias;
  }
  fill(m.out_w, 1.0 / std::sqrt(static_cast<double>(m.out_w.cols())));
  return m;
}

inline std::vector<Eigen::Index> default_dims() { return {9, 16, 16, 16, 16}; }

/// Batched input: one hidden-major matrix per time step, columns = samples.
using Sequence = std::vector<Mat>;

namespace detail {

inline Mat sigmoid(const Mat& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

struct StepCache {
  Mat x, h_prev, z, r, rh, cand;
};

} // namespace detail

/// Forward pass state kept for back-propagation.
struct ForwardCache {
  std::vector<std::vector<detail::StepCache>> steps; // [layer][t]
  std::vector<Mat> last_hidden;                      // per layer, h_T
  Mat output;                                        // 1 × batch, normalized
};

/// Runs the stack over `xs` (each input_size × batch). `h0` optionally
/// gives each layer's initial hidden state (hidden × batch); zero otherwise.
inline ForwardCache forward(const GruModel& m, const Sequence& xs, const std::vector<Mat>* h0 = nullptr) {
  if (xs.empty()) throw EmptyInput("gru: empty sequence");
  if (m.layers.empty()) throw DimensionMismatch("gru: model has no layers");
  const Eigen::Index batch = xs.front().cols();
  for (const auto& x : xs)
    if (x.rows() != m.input_size() || x.cols() != batch)
      throw DimensionMismatch("gru: input is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                              ", expected " + std::to_string(m.input_size()) + "x" + std::to_string(batch));
  if (h0 && h0->size() != m.layers.size()) throw DimensionMismatch("gru: one initial state per layer expected");

  ForwardCache c;
  c.steps.resize(m.layers.size());
  const Sequence* input = &xs;
  Sequence outputs;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    Mat h = Mat::Zero(L.hidden_size(), batch);
    if (h0) {
      const Mat& given = (*h0)[l];
      if (given.rows() != h.rows() || given.cols() != batch) throw DimensionMismatch("gru: initial state shape");
      h = given;
    }
    Sequence next;
    next.reserve(input->size());
    auto& cache = c.steps[l];
    cache.reserve(input->size());
    for (const Mat& x : *input) {
      detail::StepCache s;
      s.x = x;
      s.h_prev = h;
      s.z = detail::sigmoid((L.wz * x + L.uz * h).colwise() + L.bz.col(0));
      s.r = detail::sigmoid((L.wr * x + L.ur * h).colwise() + L.br.col(0));
      s.rh = s.r.cwiseProduct(h);
      s.cand = ((L.wh * x + L.uh * s.rh).colwise() + L.bh.col(0)).array().tanh().matrix();
      h = (1.0 - s.z.array()).matrix().cwiseProduct(h) + s.z.cwiseProduct(s.cand);
      next.push_back(h);
      cache.push_back(std::move(s));
    }
    c.last_hidden.push_back(h);
    outputs = std::move(next);
    input = &outputs;
  }
  c.output = (m.out_w * c.last_hidden.back()).array() + m.out_b(0, 0);
  return c;
}

/// Gradients with the same shapes as the model parameters.
struct Gradients {
  GruModel d;
  std::vector<Mat> d_h0; // per layer
};

/// Back-propagates d(loss)/d(output) (1 × batch) through time and layers.
inline Gradients backward(const GruModel& m, const ForwardCache& c, const Mat& d_output) {
  Gradients g;
  g.d = m;
  for (Mat* p : g.d.params()) p->setZero();
  g.d.out_w = d_output * c.last_hidden.back().transpose();
  g.d.out_b(0, 0) = d_output.sum();
  g.d_h0.resize(m.layers.size());

  const std::size_t T = c.steps.front().size();
  // Gradient arriving at each layer's output h_t from above.
  std::vector<Mat> d_above(T);
  for (std::size_t t = 0; t < T; ++t) d_above[t] = Mat::Zero(m.layers.back().hidden_size(), d_output.cols());
  d_above[T - 1] = m.out_w.transpose() * d_output;

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& L = m.layers[l];
    auto& G = g.d.layers[l];
    std::vector<Mat> d_below(T);
    Mat dh_next = Mat::Zero(L.hidden_size(), d_output.cols());
    for (std::size_t t = T; t-- > 0;) {
      const auto& s = c.steps[l][t];
      const Mat dh = d_above[t] + dh_next;
      const Mat dz = dh.cwiseProduct(s.cand - s.h_prev);
      const Mat dcand = dh.cwiseProduct(s.z);
      Mat dh_prev = dh.cwiseProduct((1.0 - s.z.array()).matrix());

      const Mat da_h = dcand.cwiseProduct((1.0 - s.cand.array().square()).matrix());
      G.wh += da_h * s.x.transpose();
      G.uh += da_h * s.rh.transpose();
      G.bh += da_h.rowwise().sum();
      const Mat d_rh = L.uh.transpose() * da_h;
      const Mat dr = d_rh.cwiseProduct(s.h_prev);
      dh_prev += d_rh.cwiseProduct(s.r);

      const Mat da_z = dz.cwiseProduct((s.z.array() * (1.0 - s.z.array())).matrix());
      const Mat da_r = dr.cwiseProduct((s.r.array() * (1.0 - s.r.array())).matrix());
      G.wz += da_z * s.x.transpose();
      G.uz += da_z * s.h_prev.transpose();
      G.bz += da_z.rowwise().sum();
      G.wr += da_r * s.x.transpose();
      G.ur += da_r * s.h_prev.transpose();
      G.br += da_r.rowwise().sum();
      dh_prev += L.uz.transpose() * da_z + L.ur.transpose() * da_r;

      d_below[t] = L.wz.transpose() * da_z + L.wr.transpose() * da_r + L.wh.transpose() * da_h;
      dh_next = std::move(dh_prev);
    }
    g.d_h0[l] = dh_next;
    d_above = std::move(d_below);
  }
  return g;
}

/// Mean squared error over the batch and its gradient w.r.t. the output.
inline double mse(const Mat& output, const Mat& target, Mat* d_output = nullptr) {
  if (output.cols() != target.cols()) throw LengthMismatch("mse: output and target sizes differ");
  const Mat diff = output - target;
  const double n = static_cast<double>(diff.cols());
  if (d_output) *d_output = diff * (2.0 / n);
  return diff.squaredNorm() / n;
}

/// Normalized batch input from windows of records: xs[t](k, b) is feature k
/// of record t of window b.
inline Sequence to_sequence(const Normalization& norm, const std::vector<std::vector<Features>>& windows) {
  if (windows.empty()) throw EmptyInput("gru: no windows");
  const std::size_t T = windows.front().size();
  Sequence xs(T, Mat(static_cast<Eigen::Index>(feature_count), static_cast<Eigen::Index>(windows.size())));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    if (windows[b].size() != T) throw DimensionMismatch("gru: windows must have equal length");
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < feature_count; ++k)
        xs[t](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = norm.feature(k, windows[b][t][k]);
  }
  return xs;
}

/// Predicted temperature (°C) for one window of raw feature vectors.
inline double predict(const GruModel& m, const std::vector<Features>& window) {
  if (m.input_size() != static_cast<Eigen::Index>(feature_count))
    throw DimensionMismatch("gru: model input width is " + std::to_string(m.input_size()) + ", expected 9");
  const auto c = forward(m, to_sequence(m.norm, {window}));
  return m.norm.denormalize(c.output(0, 0));
}

} // namespace thermaldc::predictor
