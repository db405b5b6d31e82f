// SPDX-License-Identifier: Apache-2.0
#include "lineocr/layers.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace lineocr {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
ConstMatMap<T> as_matrix(const Tensor<T>& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap<T>(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
MatMap<T> as_matrix(Tensor<T>& t, std::size_t rows, std::size_t cols) {
  return MatMap<T>(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
void fill_uniform(Tensor<T>& t, double limit, Rng& rng) {
  for (auto& v : t.data()) v = static_cast<T>(uniform(rng, -limit, limit));
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + " expects a rank-" + std::to_string(rank) + " input, got " +
                     shape_string(shape));
  }
}

// [h*w, 9*c] patch matrix for a 3x3 window with zero padding 1.
template <typename T>
RowMat<T> im2col(const Tensor<T>& input) {
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  RowMat<T> col = RowMat<T>::Zero(static_cast<Eigen::Index>(h * w), static_cast<Eigen::Index>(9 * c));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      T* dst = col.data() + (y * w + x) * 9 * c;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        if (sy < 0 || sy >= static_cast<long>(h)) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(x) + kx - 1;
          if (sx < 0 || sx >= static_cast<long>(w)) continue;
          const T* src = input.raw() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
          std::copy(src, src + c, dst + (ky * 3 + kx) * c);
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(const RowMat<T>& col, Tensor<T>& grad_input) {
  const std::size_t h = grad_input.dim(0), w = grad_input.dim(1), c = grad_input.dim(2);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T* src = col.data() + (y * w + x) * 9 * c;
      for (int ky = 0; ky < 3; ++ky) {
        const long sy = static_cast<long>(y) + ky - 1;
        if (sy < 0 || sy >= static_cast<long>(h)) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const long sx = static_cast<long>(x) + kx - 1;
          if (sx < 0 || sx >= static_cast<long>(w)) continue;
          T* dst = grad_input.raw() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * c;
          const T* s = src + (ky * 3 + kx) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += s[ch];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
const Tensor<T>& LayerParams<T>::weight(const std::string& role) const {
  auto it = weights.find(role);
  if (it == weights.end()) throw ShapeError("layer '" + name + "' has no weight '" + role + "'");
  return it->second;
}

template <typename T>
Tensor<T>& LayerParams<T>::weight(const std::string& role) {
  auto it = weights.find(role);
  if (it == weights.end()) throw ShapeError("layer '" + name + "' has no weight '" + role + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// conv

template <typename T>
LayerParams<T> make_conv_params(std::string name, std::size_t in_channels, std::size_t filters, Rng& rng) {
  LayerParams<T> p;
  p.name = std::move(name);
  Tensor<T> kernel({3, 3, in_channels, filters});
  fill_uniform(kernel, std::sqrt(6.0 / static_cast<double>(9 * in_channels + 9 * filters)), rng);
  p.weights.emplace("kernel", std::move(kernel));
  p.weights.emplace("bias", Tensor<T>({filters}));
  p.zero_grad();
  return p;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params, ConvCache<T>* cache) {
  require_rank(input.shape(), 3, "conv2d");
  const Tensor<T>& kernel = params.weight("kernel");
  const Tensor<T>& bias = params.weight("bias");
  if (kernel.rank() != 4 || kernel.dim(0) != 3 || kernel.dim(1) != 3) {
    throw ShapeError("conv2d kernel must be 3x3xCinxCout, got " + shape_string(kernel.shape()));
  }
  const std::size_t h = input.dim(0), w = input.dim(1), c_in = input.dim(2), c_out = kernel.dim(3);
  if (kernel.dim(2) != c_in) {
    throw ShapeError("conv2d channel mismatch: input " + shape_string(input.shape()) + " vs kernel " +
                     shape_string(kernel.shape()));
  }
  if (bias.size() != c_out) throw ShapeError("conv2d bias size mismatch");

  const RowMat<T> col = im2col(input);
  Tensor<T> out({h, w, c_out});
  auto out_m = as_matrix(out, h * w, c_out);
  out_m.noalias() = col * as_matrix(kernel, 9 * c_in, c_out);
  out_m.rowwise() += as_matrix(bias, 1, c_out).row(0);
  for (auto& v : out.data()) v = v > T(0) ? v : T(0);

  if (cache) {
    cache->input = input;
    cache->output = out;
  }
  return out;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& grad_out, const ConvCache<T>& cache, const LayerParams<T>& params,
                          GradMap<T>& grads) {
  if (cache.input.empty()) throw StateError("conv2d backward called without a forward cache");
  if (!grad_out.same_shape(cache.output)) throw ShapeError("conv2d backward: gradient shape mismatch");
  const Tensor<T>& kernel = params.weight("kernel");
  const std::size_t h = cache.input.dim(0), w = cache.input.dim(1), c_in = cache.input.dim(2);
  const std::size_t c_out = kernel.dim(3);

  RowMat<T> grad_pre(static_cast<Eigen::Index>(h * w), static_cast<Eigen::Index>(c_out));
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_pre.data()[i] = cache.output[i] > T(0) ? grad_out[i] : T(0);
  }
  const RowMat<T> col = im2col(cache.input);
  as_matrix(grads.at("kernel"), 9 * c_in, c_out).noalias() += col.transpose() * grad_pre;
  as_matrix(grads.at("bias"), 1, c_out).row(0) += grad_pre.colwise().sum();

  const RowMat<T> grad_col = grad_pre * as_matrix(kernel, 9 * c_in, c_out).transpose();
  Tensor<T> grad_in(cache.input.shape());
  col2im_add(grad_col, grad_in);
  return grad_in;
}

// ---------------------------------------------------------------------------
// max pool

template <typename T>
Tensor<T> max_pool_forward(const Tensor<T>& input, std::size_t kh, std::size_t kw, PoolCache* cache) {
  require_rank(input.shape(), 3, "max_pool");
  if (kh < 1 || kh > 2 || kw < 1 || kw > 2) throw ParamError("max_pool kernel extents must be 1 or 2");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (h < kh || w < kw) {
    throw ShapeError("max_pool " + std::to_string(kh) + "x" + std::to_string(kw) + " does not fit input " +
                     shape_string(input.shape()));
  }
  const std::size_t oh = h / kh, ow = w / kw;
  Tensor<T> out({oh, ow, c});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        // Row-major window scan with strict '>' keeps the first maximum on ties.
        std::size_t best = ((y * kh) * w + x * kw) * c + ch;
        for (std::size_t dy = 0; dy < kh; ++dy) {
          for (std::size_t dx = 0; dx < kw; ++dx) {
            const std::size_t idx = ((y * kh + dy) * w + x * kw + dx) * c + ch;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (y * ow + x) * c + ch;
        out[o] = input[best];
        argmax[o] = best;
      }
    }
  }
  if (cache) {
    cache->input_shape = input.shape();
    cache->argmax = std::move(argmax);
  }
  return out;
}

template <typename T>
Tensor<T> max_pool_backward(const Tensor<T>& grad_out, const PoolCache& cache) {
  if (cache.input_shape.empty()) throw StateError("max_pool backward called without a forward cache");
  if (grad_out.size() != cache.argmax.size()) throw ShapeError("max_pool backward: gradient shape mismatch");
  Tensor<T> grad_in(cache.input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[cache.argmax[o]] += grad_out[o];
  return grad_in;
}

// ---------------------------------------------------------------------------
// bidirectional LSTM

template <typename T>
LayerParams<T> make_lstm_params(std::string name, std::size_t input_size, std::size_t hidden, Rng& rng) {
  LayerParams<T> p;
  p.name = std::move(name);
  for (const char* dir : {"fw_", "bw_"}) {
    Tensor<T> W({input_size, 4 * hidden});
    Tensor<T> U({hidden, 4 * hidden});
    Tensor<T> b({4 * hidden});
    fill_uniform(W, 1.0 / std::sqrt(static_cast<double>(input_size)), rng);
    fill_uniform(U, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = T(1);  // forget gate
    p.weights.emplace(std::string(dir) + "W", std::move(W));
    p.weights.emplace(std::string(dir) + "U", std::move(U));
    p.weights.emplace(std::string(dir) + "b", std::move(b));
  }
  p.zero_grad();
  return p;
}

namespace {

template <typename T>
void lstm_direction_forward(const Tensor<T>& input, const Tensor<T>& W, const Tensor<T>& U, const Tensor<T>& b,
                            bool reverse, LstmDirectionCache<T>& out) {
  const std::size_t steps = input.dim(0), d = input.dim(1), hidden = U.dim(0), g4 = 4 * hidden;
  if (W.dim(0) != d || W.dim(1) != g4 || U.dim(1) != g4 || b.size() != g4) {
    throw ShapeError("bilstm weight shapes do not match input " + shape_string(input.shape()));
  }
  out.gates = Tensor<T>({steps, g4});
  out.cells = Tensor<T>({steps, hidden});
  out.hidden = Tensor<T>({steps, hidden});

  auto z = as_matrix(out.gates, steps, g4);
  z.noalias() = as_matrix(input, steps, d) * as_matrix(W, d, g4);
  z.rowwise() += as_matrix(b, 1, g4).row(0);
  const auto u = as_matrix(U, hidden, g4);

  RowVec<T> rec(static_cast<Eigen::Index>(g4));
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    T* gate = out.gates.raw() + t * g4;
    const T* c_prev = nullptr;
    if (s > 0) {
      const std::size_t prev = reverse ? t + 1 : t - 1;
      rec.noalias() = as_matrix(out.hidden, steps, hidden).row(static_cast<Eigen::Index>(prev)) * u;
      for (std::size_t j = 0; j < g4; ++j) gate[j] += rec[static_cast<Eigen::Index>(j)];
      c_prev = out.cells.raw() + prev * hidden;
    }
    T* c = out.cells.raw() + t * hidden;
    T* h = out.hidden.raw() + t * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      const T i_g = sigmoid(gate[j]);
      const T f_g = sigmoid(gate[hidden + j]);
      const T g_g = std::tanh(gate[2 * hidden + j]);
      const T o_g = sigmoid(gate[3 * hidden + j]);
      gate[j] = i_g;
      gate[hidden + j] = f_g;
      gate[2 * hidden + j] = g_g;
      gate[3 * hidden + j] = o_g;
      c[j] = i_g * g_g + (c_prev ? f_g * c_prev[j] : T(0));
      h[j] = o_g * std::tanh(c[j]);
    }
  }
}

// grad_h is [T,H] (this direction's slice of the output gradient).
template <typename T>
void lstm_direction_backward(const Tensor<T>& input, const RowMat<T>& grad_h, const LstmDirectionCache<T>& cache,
                             const Tensor<T>& W, const Tensor<T>& U, bool reverse, Tensor<T>& gW, Tensor<T>& gU,
                             Tensor<T>& gb, Tensor<T>& grad_in) {
  const std::size_t steps = input.dim(0), d = input.dim(1), hidden = U.dim(0), g4 = 4 * hidden;
  RowMat<T> dz = RowMat<T>::Zero(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(g4));
  RowVec<T> dh_next = RowVec<T>::Zero(static_cast<Eigen::Index>(hidden));
  std::vector<T> dc_next(hidden, T(0));
  const auto u = as_matrix(U, hidden, g4);
  auto gu = as_matrix(gU, hidden, g4);
  const auto hid = as_matrix(cache.hidden, steps, hidden);

  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    const bool has_prev = s > 0;
    const std::size_t prev = reverse ? t + 1 : t - 1;
    const T* gate = cache.gates.raw() + t * g4;
    const T* c = cache.cells.raw() + t * hidden;
    const T* c_prev = has_prev ? cache.cells.raw() + prev * hidden : nullptr;
    T* dzt = dz.data() + t * g4;
    for (std::size_t j = 0; j < hidden; ++j) {
      const T i_g = gate[j], f_g = gate[hidden + j], g_g = gate[2 * hidden + j], o_g = gate[3 * hidden + j];
      const T dh = grad_h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) +
                   dh_next[static_cast<Eigen::Index>(j)];
      const T tc = std::tanh(c[j]);
      const T d_o = dh * tc;
      const T dc = dh * o_g * (T(1) - tc * tc) + dc_next[j];
      const T d_i = dc * g_g;
      const T d_g = dc * i_g;
      const T d_f = has_prev ? dc * c_prev[j] : T(0);
      dc_next[j] = dc * f_g;
      dzt[j] = d_i * i_g * (T(1) - i_g);
      dzt[hidden + j] = d_f * f_g * (T(1) - f_g);
      dzt[2 * hidden + j] = d_g * (T(1) - g_g * g_g);
      dzt[3 * hidden + j] = d_o * o_g * (T(1) - o_g);
    }
    const auto dz_row = dz.row(static_cast<Eigen::Index>(t));
    dh_next.noalias() = dz_row * u.transpose();
    if (has_prev) gu.noalias() += hid.row(static_cast<Eigen::Index>(prev)).transpose() * dz_row;
  }

  const auto x = as_matrix(input, steps, d);
  as_matrix(gW, d, g4).noalias() += x.transpose() * dz;
  as_matrix(gb, 1, g4).row(0) += dz.colwise().sum();
  as_matrix(grad_in, steps, d).noalias() += dz * as_matrix(W, d, g4).transpose();
}

}  // namespace

template <typename T>
Tensor<T> bilstm_forward(const Tensor<T>& input, const LayerParams<T>& params, LstmCache<T>* cache) {
  require_rank(input.shape(), 2, "bilstm");
  LstmCache<T> local;
  LstmCache<T>& c = cache ? *cache : local;
  lstm_direction_forward(input, params.weight("fw_W"), params.weight("fw_U"), params.weight("fw_b"), false,
                         c.forward);
  lstm_direction_forward(input, params.weight("bw_W"), params.weight("bw_U"), params.weight("bw_b"), true,
                         c.backward);
  const std::size_t steps = input.dim(0), hidden = params.weight("fw_U").dim(0);
  Tensor<T> out({steps, 2 * hidden});
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(c.forward.hidden.raw() + t * hidden, hidden, out.raw() + t * 2 * hidden);
    std::copy_n(c.backward.hidden.raw() + t * hidden, hidden, out.raw() + t * 2 * hidden + hidden);
  }
  if (cache) cache->input = input;
  return out;
}

template <typename T>
Tensor<T> bilstm_backward(const Tensor<T>& grad_out, const LstmCache<T>& cache, const LayerParams<T>& params,
                          GradMap<T>& grads) {
  if (cache.input.empty()) throw StateError("bilstm backward called without a forward cache");
  const std::size_t steps = cache.input.dim(0), hidden = params.weight("fw_U").dim(0);
  if (grad_out.rank() != 2 || grad_out.dim(0) != steps || grad_out.dim(1) != 2 * hidden) {
    throw ShapeError("bilstm backward: gradient shape mismatch");
  }
  const auto g = as_matrix(grad_out, steps, 2 * hidden);
  const RowMat<T> g_fw = g.leftCols(static_cast<Eigen::Index>(hidden));
  const RowMat<T> g_bw = g.rightCols(static_cast<Eigen::Index>(hidden));
  Tensor<T> grad_in(cache.input.shape());
  lstm_direction_backward(cache.input, g_fw, cache.forward, params.weight("fw_W"), params.weight("fw_U"), false,
                          grads.at("fw_W"), grads.at("fw_U"), grads.at("fw_b"), grad_in);
  lstm_direction_backward(cache.input, g_bw, cache.backward, params.weight("bw_W"), params.weight("bw_U"), true,
                          grads.at("bw_W"), grads.at("bw_U"), grads.at("bw_b"), grad_in);
  return grad_in;
}

// ---------------------------------------------------------------------------
// dense + softmax

template <typename T>
LayerParams<T> make_dense_params(std::string name, std::size_t input_size, std::size_t classes, Rng& rng) {
  LayerParams<T> p;
  p.name = std::move(name);
  Tensor<T> W({input_size, classes});
  fill_uniform(W, std::sqrt(6.0 / static_cast<double>(input_size + classes)), rng);
  p.weights.emplace("W", std::move(W));
  p.weights.emplace("bias", Tensor<T>({classes}));
  p.zero_grad();
  return p;
}

template <typename T>
ProbMatrix<T> softmax_rows(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax");
  ProbMatrix<T> probs(logits.shape());
  const std::size_t cols = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const auto in = logits.row(r);
    auto out = probs.row(r);
    const T mx = *std::max_element(in.begin(), in.end());
    T sum = 0;
    for (std::size_t k = 0; k < cols; ++k) {
      out[k] = std::exp(in[k] - mx);
      sum += out[k];
    }
    for (std::size_t k = 0; k < cols; ++k) out[k] /= sum;
  }
  return probs;
}

template <typename T>
DenseOutput<T> dense_softmax_forward(const Tensor<T>& input, const LayerParams<T>& params) {
  require_rank(input.shape(), 2, "dense_softmax");
  const Tensor<T>& W = params.weight("W");
  const Tensor<T>& bias = params.weight("bias");
  const std::size_t steps = input.dim(0), d = input.dim(1);
  if (W.dim(0) != d) {
    throw ShapeError("dense input size " + std::to_string(d) + " does not match weights " + shape_string(W.shape()));
  }
  const std::size_t classes = W.dim(1);
  DenseOutput<T> out;
  out.logits = Tensor<T>({steps, classes});
  // Plain loop so each logit column only depends on its own weights: columns
  // shared between codecs stay bitwise equal regardless of the codec size.
  for (std::size_t t = 0; t < steps; ++t) {
    T* z = out.logits.raw() + t * classes;
    const T* x = input.raw() + t * d;
    for (std::size_t j = 0; j < d; ++j) {
      const T xj = x[j];
      const T* w = W.raw() + j * classes;
      for (std::size_t k = 0; k < classes; ++k) z[k] += xj * w[k];
    }
    for (std::size_t k = 0; k < classes; ++k) z[k] += bias[k];
  }
  out.probs = softmax_rows(out.logits);
  return out;
}

template <typename T>
Tensor<T> dense_softmax_backward(const Tensor<T>& grad_logits, const Tensor<T>& input, const LayerParams<T>& params,
                                 GradMap<T>& grads) {
  if (input.empty()) throw StateError("dense backward called without a forward cache");
  const Tensor<T>& W = params.weight("W");
  const std::size_t steps = input.dim(0), d = input.dim(1), classes = W.dim(1);
  if (grad_logits.rank() != 2 || grad_logits.dim(0) != steps || grad_logits.dim(1) != classes) {
    throw ShapeError("dense backward: gradient shape mismatch");
  }
  const auto g = as_matrix(grad_logits, steps, classes);
  const auto x = as_matrix(input, steps, d);
  as_matrix(grads.at("W"), d, classes).noalias() += x.transpose() * g;
  as_matrix(grads.at("bias"), 1, classes).row(0) += g.colwise().sum();
  Tensor<T> grad_in({steps, d});
  as_matrix(grad_in, steps, d).noalias() = g * as_matrix(W, d, classes).transpose();
  return grad_in;
}

template <typename T>
Tensor<T> softmax_backward(const ProbMatrix<T>& probs, const Tensor<T>& grad_probs) {
  if (!probs.same_shape(grad_probs)) throw ShapeError("softmax backward: shape mismatch");
  Tensor<T> out(probs.shape());
  for (std::size_t r = 0; r < probs.dim(0); ++r) {
    const auto p = probs.row(r);
    const auto g = grad_probs.row(r);
    T dot = 0;
    for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * g[k];
    auto o = out.row(r);
    for (std::size_t k = 0; k < p.size(); ++k) o[k] = p[k] * (g[k] - dot);
  }
  return out;
}

// ---------------------------------------------------------------------------
// dropout

template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, double rate, Rng& rng, Tensor<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParamError("dropout rate must lie in [0,1), got " + std::to_string(rate));
  Tensor<T> m(input.shape(), T(1));
  if (rate > 0.0) {
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& v : m.data()) v = uniform01(rng) < rate ? T(0) : keep_scale;
  }
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] * m[i];
  if (mask) *mask = std::move(m);
  return out;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const Tensor<T>& mask) {
  if (!grad_out.same_shape(mask)) throw StateError("dropout backward without a matching mask");
  Tensor<T> out(grad_out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grad_out[i] * mask[i];
  return out;
}

#define LINEOCR_INSTANTIATE_LAYERS(T)                                                                            \
  template struct LayerParams<T>;                                                                                \
  template LayerParams<T> make_conv_params<T>(std::string, std::size_t, std::size_t, Rng&);                      \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const LayerParams<T>&, ConvCache<T>*);                   \
  template Tensor<T> conv2d_backward<T>(const Tensor<T>&, const ConvCache<T>&, const LayerParams<T>&, GradMap<T>&); \
  template Tensor<T> max_pool_forward<T>(const Tensor<T>&, std::size_t, std::size_t, PoolCache*);                 \
  template Tensor<T> max_pool_backward<T>(const Tensor<T>&, const PoolCache&);                                    \
  template LayerParams<T> make_lstm_params<T>(std::string, std::size_t, std::size_t, Rng&);                      \
  template Tensor<T> bilstm_forward<T>(const Tensor<T>&, const LayerParams<T>&, LstmCache<T>*);                   \
  template Tensor<T> bilstm_backward<T>(const Tensor<T>&, const LstmCache<T>&, const LayerParams<T>&, GradMap<T>&); \
  template LayerParams<T> make_dense_params<T>(std::string, std::size_t, std::size_t, Rng&);                     \
  template ProbMatrix<T> softmax_rows<T>(const Tensor<T>&);                                                       \
  template DenseOutput<T> dense_softmax_forward<T>(const Tensor<T>&, const LayerParams<T>&);                      \
  template Tensor<T> dense_softmax_backward<T>(const Tensor<T>&, const Tensor<T>&, const LayerParams<T>&,          \
                                               GradMap<T>&);                                                     \
  template Tensor<T> softmax_backward<T>(const ProbMatrix<T>&, const Tensor<T>&);                                 \
  template Tensor<T> dropout_apply<T>(const Tensor<T>&, double, Rng&, Tensor<T>*);                                \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, const Tensor<T>&);

LINEOCR_INSTANTIATE_LAYERS(float)
LINEOCR_INSTANTIATE_LAYERS(double)

}  // namespace lineocr
