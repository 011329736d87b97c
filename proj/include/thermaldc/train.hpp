#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "gru.hpp"
#include "telemetry.hpp"

namespace thermaldc::predictor {

class EmptyDataset : public EmptyInput {
public:
  using EmptyInput::EmptyInput;
};

/// Fraction of predictions within epsilon_rel · |actual| of the actual value.
inline double prediction_accuracy(std::span<const double> preds, std::span<const double> actuals,
                                  double epsilon_rel = 0.05) {
  if (preds.size() != actuals.size()) throw LengthMismatch("prediction_accuracy: lengths differ");
  if (preds.empty()) throw EmptyInput("prediction_accuracy: no predictions");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (std::abs(preds[i] - actuals[i]) <= epsilon_rel * std::abs(actuals[i])) ++ok;
  return static_cast<double>(ok) / static_cast<double>(preds.size());
}

struct Sample {
  std::vector<Features> window;
  double target_c = 0.0;
};

/// One sample per record: the record and the `window - 1` records before it
/// on the same server (the first record repeats when history is short);
/// the target is the record's CPU temperature.
inline std::vector<Sample> make_samples(const std::vector<std::vector<TelemetryRecord>>& servers,
                                        std::size_t window = 8) {
  if (window == 0) throw DomainError("make_samples: window must be > 0");
  std::vector<Sample> out;
  for (const auto& recs : servers) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      Sample s;
      s.window.reserve(window);
      for (std::size_t k = 0; k < window; ++k) {
        const std::size_t back = window - 1 - k;
        s.window.push_back(recs[i >= back ? i - back : 0].features());
      }
      s.target_c = recs[i].cpu_temp_c;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline Normalization fit_normalization(std::span<const Sample> samples) {
  if (samples.empty()) throw EmptyDataset("fit_normalization: no samples");
  Normalization n;
  n.feat_min.fill(std::numeric_limits<double>::infinity());
  n.feat_max.fill(-std::numeric_limits<double>::infinity());
  n.target_min = std::numeric_limits<double>::infinity();
  n.target_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    for (const auto& f : s.window)
      for (std::size_t k = 0; k < feature_count; ++k) {
        n.feat_min[k] = std::min(n.feat_min[k], f[k]);
        n.feat_max[k] = std::max(n.feat_max[k], f[k]);
      }
    n.target_min = std::min(n.target_min, s.target_c);
    n.target_max = std::max(n.target_max, s.target_c);
  }
  return n;
}

struct TrainHyper {
  std::vector<Eigen::Index> dims = default_dims();
  std::size_t epochs = 1000;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  std::size_t window = 8;
  /// The last `test_count` samples are held out.
  std::size_t test_count = 100;
  double epsilon_rel = 0.05;
  /// Added to the update-gate biases at initialization.
  double update_bias = 3.0;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double final_train_mse = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> loss_history;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
};

struct Batch {
  Sequence xs;
  Mat target; // 1 × batch, normalized
};

inline Batch make_batch(const Normalization& norm, std::span<const Sample> samples) {
  std::vector<std::vector<Features>> windows;
  windows.reserve(samples.size());
  Batch b;
  b.target.resize(1, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    windows.push_back(samples[i].window);
    b.target(0, static_cast<Eigen::Index>(i)) = norm.target(samples[i].target_c);
  }
  b.xs = to_sequence(norm, windows);
  return b;
}

/// Predictions (°C) for many samples in one batched pass.
inline std::vector<double> predict_samples(const GruModel& m, std::span<const Sample> samples) {
  if (samples.empty()) return {};
  const auto b = make_batch(m.norm, samples);
  const auto c = forward(m, b.xs);
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.norm.denormalize(c.output(0, static_cast<Eigen::Index>(i)));
  return out;
}

/// Full-batch gradient descent with momentum on the normalized MSE.
/// Calls `on_epoch(epoch, loss)` after every epoch when set.
inline std::pair<GruModel, TrainReport>
train_predictor(const std::vector<Sample>& samples, const TrainHyper& hyper,
                const std::function<void(std::size_t, double)>& on_epoch = {}) {
  if (samples.size() <= hyper.test_count) throw EmptyDataset("train_predictor: no training samples after holding out the test split");
  const std::span<const Sample> all(samples);
  const auto train = all.first(samples.size() - hyper.test_count);
  const auto test = all.last(hyper.test_count);

  GruModel m = init_model(hyper.dims, hyper.seed, hyper.update_bias);
  if (m.input_size() != static_cast<Eigen::Index>(feature_count))
    throw DimensionMismatch("train_predictor: input width must be 9");
  m.norm = fit_normalization(train);

  const Batch batch = make_batch(m.norm, train);
  GruModel velocity = m;
  for (Mat* p : velocity.params()) p->setZero();

  TrainReport rep;
  rep.train_samples = train.size();
  rep.test_samples = test.size();
  for (std::size_t e = 0; e < hyper.epochs; ++e) {
    const auto c = forward(m, batch.xs);
    Mat d_out;
    const double loss = mse(c.output, batch.target, &d_out);
    if (!std::isfinite(loss))
      throw NonFiniteLoss("train_predictor: loss became non-finite at epoch " + std::to_string(e) +
                          " (learning rate " + std::to_string(hyper.learning_rate) + ")");
    const auto g = backward(m, c, d_out);
    auto ps = m.params();
    auto vs = velocity.params();
    auto gs = g.d.params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      *vs[i] = hyper.momentum * *vs[i] - hyper.learning_rate * *gs[i];
      *ps[i] += *vs[i];
    }
    rep.loss_history.push_back(loss);
    if (on_epoch) on_epoch(e, loss);
  }
  rep.epochs_run = hyper.epochs;
  {
    const auto c = forward(m, batch.xs);
    rep.final_train_mse = mse(c.output, batch.target);
  }
  if (!test.empty()) {
    const auto preds = predict_samples(m, test);
    std::vector<double> actual;
    for (const auto& s : test) actual.push_back(s.target_c);
    rep.test_accuracy = prediction_accuracy(preds, actual, hyper.epsilon_rel);
  }
  return {std::move(m), std::move(rep)};
}

// Model file: 8-byte magic, u32 version, u32 layer count, u32 widths
// (input then one per layer), normalization and parameters as
// little-endian f64 (matrices column-major, in GruModel::params order).

inline constexpr char model_magic[8] = {'T', 'D', 'C', 'G', 'R', 'U', '\0', '\1'};
inline constexpr std::uint32_t model_version = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
  Reader(std::string_view bytes, std::string where) : b_(bytes), where_(std::move(where)) {}

  std::uint64_t uint(int n) {
    if (pos_ + static_cast<std::size_t>(n) > b_.size()) throw ParseError(where_, 0, "truncated model file");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string_view take(std::size_t n) {
    if (pos_ + n > b_.size()) throw ParseError(where_, 0, "truncated model file");
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == b_.size(); }
  const std::string& where() const { return where_; }

private:
  std::string_view b_;
  std::string where_;
  std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_model(const GruModel& m) {
  std::string out(model_magic, sizeof model_magic);
  detail::put_u32(out, model_version);
  detail::put_u32(out, static_cast<std::uint32_t>(m.layers.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.input_size()));
  for (const auto& l : m.layers) detail::put_u32(out, static_cast<std::uint32_t>(l.hidden_size()));
  for (double v : m.norm.feat_min) detail::put_f64(out, v);
  for (double v : m.norm.feat_max) detail::put_f64(out, v);
  detail::put_f64(out, m.norm.target_min);
  detail::put_f64(out, m.norm.target_max);
  for (const Mat* p : m.params())
    for (Eigen::Index i = 0; i < p->size(); ++i) detail::put_f64(out, p->data()[i]);
  return out;
}

inline GruModel deserialize_model(std::string_view bytes, const std::string& where = "model") {
  detail::Reader r(bytes, where);
  if (r.take(sizeof model_magic) != std::string_view(model_magic, sizeof model_magic))
    throw ParseError(where, 0, "not a model file (bad magic)");
  if (const auto v = r.u32(); v != model_version)
    throw ParseError(where, 0, "unsupported model version " + std::to_string(v));
  const auto n = r.u32();
  if (n == 0 || n > 64) throw ParseError(where, 0, "bad layer count");
  std::vector<Eigen::Index> dims;
  for (std::uint32_t i = 0; i <= n; ++i) {
    const auto d = r.u32();
    if (d == 0 || d > 4096) throw ParseError(where, 0, "bad layer width");
    dims.push_back(d);
  }
  GruModel m = zero_model(dims);
  for (double& v : m.norm.feat_min) v = r.f64();
  for (double& v : m.norm.feat_max) v = r.f64();
  m.norm.target_min = r.f64();
  m.norm.target_max = r.f64();
  for (Mat* p : m.params())
    for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] = r.f64();
  if (!r.at_end()) throw ParseError(where, 0, "trailing bytes after model parameters");
  return m;
}

inline void save_model(const GruModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path.string());
  const auto bytes = serialize_model(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline GruModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str(), path.filename().string());
}

} // namespace thermaldc::predictor
