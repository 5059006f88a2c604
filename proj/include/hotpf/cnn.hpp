#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hotpf/errors.hpp"
#include "hotpf/io.hpp"
#include "hotpf/rng.hpp"

// From-scratch 1D CNN: convolutional layers with zero padding and stride 1,
// ELU activations, and a final dense layer. Forward and backward passes are
// exact and bit-deterministic; convolution uses the cross-correlation
// convention like every mainstream CNN framework.

namespace hotpf {

inline double elu(double x, double alpha = 1.0) {
  return x > 0.0 ? x : alpha * (std::exp(x) - 1.0);
}

inline double elu_grad(double x, double alpha = 1.0) {
  return x > 0.0 ? 1.0 : alpha * std::exp(x);
}

// Batch of 1D feature maps, height H x channels C x batch B. Stored as a
// C x (H*B) matrix; column b*H + h holds the channel vector of height
// position h in sample b.
struct FeatureMap {
  int h = 0, c = 0, b = 0;
  Eigen::MatrixXd m;

  FeatureMap() = default;
  FeatureMap(int h_, int c_, int b_)
      : h(h_), c(c_), b(b_), m(Eigen::MatrixXd::Zero(c_, static_cast<Eigen::Index>(h_) * b_)) {}

  double& at(int hh, int cc, int bb) { return m(cc, static_cast<Eigen::Index>(bb) * h + hh); }
  double at(int hh, int cc, int bb) const { return m(cc, static_cast<Eigen::Index>(bb) * h + hh); }
};

struct Conv1dLayer {
  int kernel = 3;
  int in_ch = 1;
  int out_ch = 1;
  int pad = 1;  // (kernel-1)/2 so output height == input height; stride is 1
  Eigen::MatrixXd w;     // out_ch x (kernel*in_ch); w(o, t*in_ch + c)
  Eigen::VectorXd bias;  // out_ch

  Conv1dLayer() = default;
  Conv1dLayer(int k, int in, int out)
      : kernel(k), in_ch(in), out_ch(out), pad((k - 1) / 2),
        w(Eigen::MatrixXd::Zero(out, k * in)), bias(Eigen::VectorXd::Zero(out)) {}

  std::int64_t param_count() const {
    return static_cast<std::int64_t>(kernel) * in_ch * out_ch + out_ch;
  }
};

struct DenseLayer {
  // logical weight matrix is (in) x (out); stored transposed so the forward
  // pass is a single GEMM: out = w * flat + bias
  Eigen::MatrixXd w;     // out x in
  Eigen::VectorXd bias;  // out

  DenseLayer() = default;
  DenseLayer(int in, int out)
      : w(Eigen::MatrixXd::Zero(out, in)), bias(Eigen::VectorXd::Zero(out)) {}

  std::int64_t param_count() const {
    return static_cast<std::int64_t>(w.rows()) * w.cols() + bias.size();
  }
};

enum class Arch { Small, Deep };
enum class Target { V, Theta };

inline std::string to_string(Arch a) { return a == Arch::Small ? "small" : "deep"; }
inline std::string to_string(Target t) { return t == Target::V ? "v" : "theta"; }

struct CnnModel {
  Arch arch = Arch::Small;
  int l = 0;  // bus count == feature height
  Target target = Target::V;
  std::uint64_t seed = 0;
  std::vector<Conv1dLayer> conv;
  DenseLayer dense;
};

inline constexpr int kChannels = 8;
inline constexpr int kInputChannels = 4;

/// Zero-initialized model with the architecture's layer shapes: SMALL is
/// three k=3 conv layers, DEEP opens with a k=7 layer followed by four k=3
/// layers; both end in a dense map from the flattened 8L features to L.
inline CnnModel make_model(Arch arch, int l, Target target) {
  CnnModel m;
  m.arch = arch;
  m.l = l;
  m.target = target;
  if (arch == Arch::Small) {
    m.conv.emplace_back(3, kInputChannels, kChannels);
    m.conv.emplace_back(3, kChannels, kChannels);
    m.conv.emplace_back(3, kChannels, kChannels);
  } else {
    m.conv.emplace_back(7, kInputChannels, kChannels);
    for (int i = 0; i < 4; ++i) m.conv.emplace_back(3, kChannels, kChannels);
  }
  m.dense = DenseLayer(kChannels * l, l);
  return m;
}

inline std::int64_t param_count(const CnnModel& m) {
  std::int64_t n = 0;
  for (const auto& c : m.conv) n += c.param_count();
  return n + m.dense.param_count();
}

/// Glorot-uniform initialization, biases zero. Weight draws happen in the
/// serialization order of each layer so files and fresh inits agree.
inline void xavier_init(CnnModel& m, std::uint64_t seed) {
  m.seed = seed;
  rng::Stream st(rng::mix(seed, rng::kTagXavier));
  for (auto& c : m.conv) {
    const double fan_in = static_cast<double>(c.kernel) * c.in_ch;
    const double fan_out = static_cast<double>(c.kernel) * c.out_ch;
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (int t = 0; t < c.kernel; ++t)
      for (int ci = 0; ci < c.in_ch; ++ci)
        for (int o = 0; o < c.out_ch; ++o)
          c.w(o, t * c.in_ch + ci) = a * st.uniform_sym();
    c.bias.setZero();
  }
  const double a = std::sqrt(6.0 / (static_cast<double>(m.dense.w.cols()) + m.dense.w.rows()));
  for (Eigen::Index j = 0; j < m.dense.w.cols(); ++j)
    for (Eigen::Index o = 0; o < m.dense.w.rows(); ++o)
      m.dense.w(o, j) = a * st.uniform_sym();
  m.dense.bias.setZero();
}

namespace detail {

// im2col: stacks the kernel-window slices so the convolution becomes one
// GEMM. K(t*C + c, b*H + h) = in(c, h + t - pad, b), zero outside [0, H).
inline Eigen::MatrixXd im2col(const Conv1dLayer& layer, const FeatureMap& in) {
  const int H = in.h, C = in.c, B = in.b;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layer.kernel) * C,
                                            static_cast<Eigen::Index>(H) * B);
  for (int t = 0; t < layer.kernel; ++t) {
    const int d = t - layer.pad;
    const int h0 = std::max(0, -d);
    const int h1 = std::min(H, H - d);  // exclusive
    if (h1 <= h0) continue;
    for (int b = 0; b < B; ++b) {
      k.block(static_cast<Eigen::Index>(t) * C, static_cast<Eigen::Index>(b) * H + h0, C, h1 - h0) =
          in.m.block(0, static_cast<Eigen::Index>(b) * H + h0 + d, C, h1 - h0);
    }
  }
  return k;
}

inline void col2im_add(const Conv1dLayer& layer, const Eigen::MatrixXd& cols, FeatureMap& out) {
  const int H = out.h, C = out.c, B = out.b;
  for (int t = 0; t < layer.kernel; ++t) {
    const int d = t - layer.pad;
    const int h0 = std::max(0, -d);
    const int h1 = std::min(H, H - d);
    if (h1 <= h0) continue;
    for (int b = 0; b < B; ++b) {
      out.m.block(0, static_cast<Eigen::Index>(b) * H + h0 + d, C, h1 - h0) +=
          cols.block(static_cast<Eigen::Index>(t) * C, static_cast<Eigen::Index>(b) * H + h0, C, h1 - h0);
    }
  }
}

}  // namespace detail

/// Cross-correlation with zero padding; height is preserved. Linear map,
/// no activation.
inline FeatureMap conv1d_forward(const Conv1dLayer& layer, const FeatureMap& in) {
  if (in.c != layer.in_ch) throw ShapeMismatch("conv1d_forward: channel count");
  FeatureMap out(in.h, layer.out_ch, in.b);
  out.m.noalias() = layer.w * detail::im2col(layer, in);
  out.m.colwise() += layer.bias;
  return out;
}

struct Conv1dGrads {
  FeatureMap input;
  Eigen::MatrixXd w;
  Eigen::VectorXd bias;
};

/// Exact adjoint of conv1d_forward.
inline Conv1dGrads conv1d_backward(const Conv1dLayer& layer, const FeatureMap& in,
                                   const FeatureMap& grad_out) {
  if (grad_out.c != layer.out_ch || grad_out.h != in.h || grad_out.b != in.b)
    throw ShapeMismatch("conv1d_backward: gradient shape");
  Conv1dGrads g;
  const Eigen::MatrixXd cols = detail::im2col(layer, in);
  g.w.noalias() = grad_out.m * cols.transpose();
  g.bias = grad_out.m.rowwise().sum();
  g.input = FeatureMap(in.h, in.c, in.b);
  const Eigen::MatrixXd back = layer.w.transpose() * grad_out.m;
  detail::col2im_add(layer, back, g.input);
  return g;
}

/// Channel-major flattening within each bus: flat[h*C + c] = fm(h, c).
inline Eigen::MatrixXd flatten(const FeatureMap& fm) {
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(fm.h) * fm.c, fm.b);
  for (int b = 0; b < fm.b; ++b)
    for (int h = 0; h < fm.h; ++h)
      flat.block(static_cast<Eigen::Index>(h) * fm.c, b, fm.c, 1) =
          fm.m.col(static_cast<Eigen::Index>(b) * fm.h + h);
  return flat;
}

inline FeatureMap unflatten(const Eigen::MatrixXd& flat, int h, int c) {
  if (flat.rows() != static_cast<Eigen::Index>(h) * c)
    throw ShapeMismatch("unflatten: row count");
  FeatureMap fm(h, c, static_cast<int>(flat.cols()));
  for (int b = 0; b < fm.b; ++b)
    for (int hh = 0; hh < h; ++hh)
      fm.m.col(static_cast<Eigen::Index>(b) * h + hh) =
          flat.block(static_cast<Eigen::Index>(hh) * c, b, c, 1);
  return fm;
}

inline Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& flat) {
  if (flat.rows() != layer.w.cols()) throw ShapeMismatch("dense_forward: input size");
  Eigen::MatrixXd out = layer.w * flat;
  out.colwise() += layer.bias;
  return out;
}

struct DenseGrads {
  Eigen::MatrixXd input;  // same shape as flat
  Eigen::MatrixXd w;
  Eigen::VectorXd bias;
};

inline DenseGrads dense_backward(const DenseLayer& layer, const Eigen::MatrixXd& flat,
                                 const Eigen::MatrixXd& grad_out) {
  if (grad_out.rows() != layer.w.rows() || grad_out.cols() != flat.cols())
    throw ShapeMismatch("dense_backward: gradient shape");
  DenseGrads g;
  g.w.noalias() = grad_out * flat.transpose();
  g.bias = grad_out.rowwise().sum();
  g.input.noalias() = layer.w.transpose() * grad_out;
  return g;
}

struct ForwardCache {
  std::vector<FeatureMap> inputs;   // what each conv layer saw
  std::vector<FeatureMap> preact;   // conv outputs before ELU
  Eigen::MatrixXd flat;             // dense input
};

/// Conv stack with ELU after every conv layer, then the linear dense head.
/// Column b of the result is the prediction for sample b.
inline Eigen::MatrixXd model_forward(const CnnModel& m, const FeatureMap& x,
                                     ForwardCache* cache = nullptr) {
  if (x.h != m.l || x.c != kInputChannels)
    throw ShapeMismatch("model_forward: input must be L x 4 x B");
  FeatureMap fm = x;
  if (cache) {
    cache->inputs.clear();
    cache->preact.clear();
  }
  for (const auto& layer : m.conv) {
    if (cache) cache->inputs.push_back(fm);
    FeatureMap z = conv1d_forward(layer, fm);
    if (cache) cache->preact.push_back(z);
    fm = std::move(z);
    fm.m = fm.m.unaryExpr([](double v) { return elu(v); });
  }
  Eigen::MatrixXd flat = flatten(fm);
  if (cache) cache->flat = flat;
  return dense_forward(m.dense, flat);
}

struct ModelGradients {
  std::vector<Eigen::MatrixXd> conv_w;
  std::vector<Eigen::VectorXd> conv_b;
  Eigen::MatrixXd dense_w;
  Eigen::VectorXd dense_b;
};

/// Backpropagation through the cached forward pass; gradients are exact.
inline ModelGradients model_backward(const CnnModel& m, const ForwardCache& cache,
                                     const Eigen::MatrixXd& grad_pred) {
  if (cache.preact.size() != m.conv.size())
    throw ShapeMismatch("model_backward: cache does not match the model");
  ModelGradients g;
  g.conv_w.resize(m.conv.size());
  g.conv_b.resize(m.conv.size());

  DenseGrads dg = dense_backward(m.dense, cache.flat, grad_pred);
  g.dense_w = std::move(dg.w);
  g.dense_b = std::move(dg.bias);

  FeatureMap fm_grad = unflatten(dg.input, m.l, kChannels);
  for (int i = static_cast<int>(m.conv.size()) - 1; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    fm_grad.m = fm_grad.m.cwiseProduct(
        cache.preact[idx].m.unaryExpr([](double v) { return elu_grad(v); }));
    Conv1dGrads cg = conv1d_backward(m.conv[idx], cache.inputs[idx], fm_grad);
    g.conv_w[idx] = std::move(cg.w);
    g.conv_b[idx] = std::move(cg.bias);
    fm_grad = std::move(cg.input);
  }
  return g;
}

// --- persistence: JSON header + per-layer payload in declaration order ---
// conv weights serialize in [t][c][o] nested order, then bias; the dense
// layer serializes its logical (in x out) matrix row-major, then bias.

inline void save_model(const CnnModel& m, const std::string& path) {
  auto os = io::open_out(path);
  io::json h{{"kind", "cnn_model"},
             {"arch", to_string(m.arch)},
             {"l", m.l},
             {"target", to_string(m.target)},
             {"seed", m.seed}};
  io::write_header(os, h);
  std::vector<double> buf;
  for (const auto& c : m.conv) {
    buf.clear();
    for (int t = 0; t < c.kernel; ++t)
      for (int ci = 0; ci < c.in_ch; ++ci)
        for (int o = 0; o < c.out_ch; ++o)
          buf.push_back(c.w(o, t * c.in_ch + ci));
    io::write_f64(os, buf);
    io::write_f64(os, c.bias.data(), static_cast<std::size_t>(c.bias.size()));
  }
  buf.clear();
  for (Eigen::Index j = 0; j < m.dense.w.cols(); ++j)
    for (Eigen::Index o = 0; o < m.dense.w.rows(); ++o)
      buf.push_back(m.dense.w(o, j));
  io::write_f64(os, buf);
  io::write_f64(os, m.dense.bias.data(), static_cast<std::size_t>(m.dense.bias.size()));
}

inline CnnModel load_model(const std::string& path) {
  auto is = io::open_in(path);
  io::json h = io::read_header(is);
  if (h.value("kind", "") != std::string("cnn_model"))
    throw IoError(path + " is not a model file");
  const Arch arch = h.at("arch").get<std::string>() == "small" ? Arch::Small : Arch::Deep;
  const Target target = h.at("target").get<std::string>() == "v" ? Target::V : Target::Theta;
  CnnModel m = make_model(arch, h.at("l").get<int>(), target);
  m.seed = h.at("seed").get<std::uint64_t>();
  for (auto& c : m.conv) {
    auto wbuf = io::read_f64(is, static_cast<std::size_t>(c.kernel) * c.in_ch * c.out_ch);
    std::size_t p = 0;
    for (int t = 0; t < c.kernel; ++t)
      for (int ci = 0; ci < c.in_ch; ++ci)
        for (int o = 0; o < c.out_ch; ++o)
          c.w(o, t * c.in_ch + ci) = wbuf[p++];
    auto bbuf = io::read_f64(is, static_cast<std::size_t>(c.out_ch));
    for (int o = 0; o < c.out_ch; ++o) c.bias[o] = bbuf[static_cast<std::size_t>(o)];
  }
  auto wbuf = io::read_f64(is, static_cast<std::size_t>(m.dense.w.size()));
  std::size_t p = 0;
  for (Eigen::Index j = 0; j < m.dense.w.cols(); ++j)
    for (Eigen::Index o = 0; o < m.dense.w.rows(); ++o)
      m.dense.w(o, j) = wbuf[p++];
  auto bbuf = io::read_f64(is, static_cast<std::size_t>(m.dense.bias.size()));
  for (Eigen::Index o = 0; o < m.dense.bias.size(); ++o)
    m.dense.bias[o] = bbuf[static_cast<std::size_t>(o)];
  return m;
}

}  // namespace hotpf
