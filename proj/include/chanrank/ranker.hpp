// include/chanrank/ranker.hpp

// Copyright 2026 The chanrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Temporal convolutional channel scorer.
//
// A chunk of L frames x n_mels log-mel features goes through
//
//   per-frame layer norm -> n_mels->B projection
//   -> blocks x sub_blocks residual blocks, dilation 2^(r mod sub_blocks):
//        1x1 conv B->H, PReLU, global layer norm,
//        depthwise conv H (kernel k, dilated, zero padded), PReLU, global norm,
//        1x1 conv H->B, residual add
//   -> per-frame B->1 projection -> mean over valid frames.
//
// Activations are laid out channels x frames. Parameters live in one flat
// vector, each tensor row-major, so the optimizer and the checkpoint writer
// see a single contiguous array.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/dsp.hpp"
#include "json.hpp"

namespace chanrank {

struct RankerConfig {
  int n_mels = kNumMels;
  int input_proj = 64;
  int bottleneck = 64;
  int hidden = 128;
  int kernel = 3;
  int blocks = 3;
  int sub_blocks = 5;
  int chunk_frames = 200;
  int inference_overlap_factor = 4;

  std::vector<int> Dilations() const {
    std::vector<int> d;
    for (int i = 0; i < sub_blocks; ++i) d.push_back(1 << i);
    return d;
  }

  int NumResidualBlocks() const { return blocks * sub_blocks; }
  int InferenceStride() const { return chunk_frames / inference_overlap_factor; }

  void Validate() const {
    CHANRANK_CHECK(n_mels > 0 && input_proj > 0 && bottleneck > 0 && hidden > 0,
                   Errc::kInvalidArgument, "layer widths must be positive");
    CHANRANK_CHECK(input_proj == bottleneck, Errc::kInvalidArgument,
                   "input_proj (", input_proj, ") must equal bottleneck (",
                   bottleneck, ") for the residual stream");
    CHANRANK_CHECK(kernel > 0 && kernel % 2 == 1, Errc::kInvalidArgument,
                   "kernel must be odd for length-preserving padding");
    CHANRANK_CHECK(blocks > 0 && sub_blocks > 0 && sub_blocks < 16,
                   Errc::kInvalidArgument, "block counts out of range");
    CHANRANK_CHECK(chunk_frames > 0, Errc::kInvalidArgument, "chunk_frames must be > 0");
    CHANRANK_CHECK(inference_overlap_factor > 0 &&
                       chunk_frames % inference_overlap_factor == 0,
                   Errc::kInvalidArgument,
                   "inference_overlap_factor must divide chunk_frames");
  }

  bool operator==(const RankerConfig &) const = default;
};

inline void to_json(nlohmann::json &j, const RankerConfig &c) {
  j = nlohmann::json{{"n_mels", c.n_mels},
                     {"input_proj", c.input_proj},
                     {"bottleneck", c.bottleneck},
                     {"hidden", c.hidden},
                     {"kernel", c.kernel},
                     {"blocks", c.blocks},
                     {"sub_blocks", c.sub_blocks},
                     {"chunk_frames", c.chunk_frames},
                     {"inference_overlap_factor", c.inference_overlap_factor}};
}

inline void from_json(const nlohmann::json &j, RankerConfig &c) {
  RankerConfig d;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string &k = it.key();
    int v = it.value().get<int>();
    if (k == "n_mels") d.n_mels = v;
    else if (k == "input_proj") d.input_proj = v;
    else if (k == "bottleneck") d.bottleneck = v;
    else if (k == "hidden") d.hidden = v;
    else if (k == "kernel") d.kernel = v;
    else if (k == "blocks") d.blocks = v;
    else if (k == "sub_blocks") d.sub_blocks = v;
    else if (k == "chunk_frames") d.chunk_frames = v;
    else if (k == "inference_overlap_factor") d.inference_overlap_factor = v;
    else Fail(Errc::kInvalidArgument, "unknown ranker config key '", k, "'");
  }
  c = d;
}

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Offsets of the tensors of one residual block inside the flat vector.
struct BlockOffsets {
  std::size_t conv1_w, conv1_b, prelu1, norm1_g, norm1_b;
  std::size_t dconv_w, dconv_b, prelu2, norm2_g, norm2_b;
  std::size_t conv2_w, conv2_b;
  int dilation;
};

struct RankerLayout {
  std::vector<TensorInfo> tensors;
  std::size_t in_norm_g, in_norm_b, in_proj_w, in_proj_b, out_w, out_b;
  std::vector<BlockOffsets> blocks;
  std::size_t total = 0;

  explicit RankerLayout(const RankerConfig &c) {
    c.Validate();
    auto add = [&](const std::string &name, int rows, int cols) {
      tensors.push_back({name, rows, cols, total});
      total += static_cast<std::size_t>(rows) * cols;
      return tensors.back().offset;
    };
    in_norm_g = add("input_norm.gain", c.n_mels, 1);
    in_norm_b = add("input_norm.bias", c.n_mels, 1);
    in_proj_w = add("input_proj.weight", c.bottleneck, c.n_mels);
    in_proj_b = add("input_proj.bias", c.bottleneck, 1);
    const auto dil = c.Dilations();
    for (int r = 0; r < c.NumResidualBlocks(); ++r) {
      const std::string p = "blocks." + std::to_string(r) + ".";
      BlockOffsets b{};
      b.conv1_w = add(p + "conv1.weight", c.hidden, c.bottleneck);
      b.conv1_b = add(p + "conv1.bias", c.hidden, 1);
      b.prelu1 = add(p + "prelu1.slope", 1, 1);
      b.norm1_g = add(p + "norm1.gain", c.hidden, 1);
      b.norm1_b = add(p + "norm1.bias", c.hidden, 1);
      b.dconv_w = add(p + "dconv.weight", c.hidden, c.kernel);
      b.dconv_b = add(p + "dconv.bias", c.hidden, 1);
      b.prelu2 = add(p + "prelu2.slope", 1, 1);
      b.norm2_g = add(p + "norm2.gain", c.hidden, 1);
      b.norm2_b = add(p + "norm2.bias", c.hidden, 1);
      b.conv2_w = add(p + "conv2.weight", c.bottleneck, c.hidden);
      b.conv2_b = add(p + "conv2.bias", c.bottleneck, 1);
      b.dilation = dil[static_cast<std::size_t>(r % c.sub_blocks)];
      blocks.push_back(b);
    }
    out_w = add("output_proj.weight", 1, c.bottleneck);
    out_b = add("output_proj.bias", 1, 1);
  }
};

/// Parameter count grouped by layer kind.
struct Census {
  std::map<std::string, std::size_t> by_layer;
  std::size_t total = 0;
};

inline Census ParameterCensus(const RankerConfig &c) {
  RankerLayout layout(c);
  Census out;
  for (const auto &t : layout.tensors) {
    std::string key = t.name;
    // "blocks.7.conv1.weight" -> "blocks.conv1.weight"
    if (key.rfind("blocks.", 0) == 0) key = "blocks." + key.substr(key.find('.', 7) + 1);
    out.by_layer[key] += t.size();
    out.total += t.size();
  }
  return out;
}

template <typename T>
struct RankerModel {
  RankerConfig config;
  std::uint64_t seed = 0;
  RankerLayout layout;
  std::vector<T> params;

  explicit RankerModel(const RankerConfig &c = {}, std::uint64_t s = 0)
      : config(c), seed(s), layout(c), params(layout.total, T(0)) {}

  std::size_t NumParams() const { return params.size(); }

  template <typename U>
  RankerModel<U> Cast() const {
    RankerModel<U> out(config, seed);
    for (std::size_t i = 0; i < params.size(); ++i) out.params[i] = static_cast<U>(params[i]);
    return out;
  }

  const TensorInfo &Tensor(const std::string &name) const {
    for (const auto &t : layout.tensors)
      if (t.name == name) return t;
    Fail(Errc::kInvalidArgument, "no tensor named ", name);
  }
};

/// He-uniform weights, zero biases, unit norm gains, PReLU slopes 0.25.
template <typename T>
RankerModel<T> BuildRanker(const RankerConfig &config, std::uint64_t seed) {
  RankerModel<T> m(config, seed);
  auto rng = DerivedRng(seed, 0x52414e4b);
  auto fill_uniform = [&](std::size_t off, std::size_t n, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < n; ++i)
      m.params[off + i] = static_cast<T>(UniformDouble(rng, -bound, bound));
  };
  auto fill_const = [&](std::size_t off, std::size_t n, double v) {
    for (std::size_t i = 0; i < n; ++i) m.params[off + i] = static_cast<T>(v);
  };
  const auto &c = config;
  const auto &l = m.layout;
  fill_const(l.in_norm_g, c.n_mels, 1.0);
  fill_uniform(l.in_proj_w, static_cast<std::size_t>(c.bottleneck) * c.n_mels, c.n_mels);
  for (const auto &b : l.blocks) {
    fill_uniform(b.conv1_w, static_cast<std::size_t>(c.hidden) * c.bottleneck, c.bottleneck);
    fill_const(b.prelu1, 1, 0.25);
    fill_const(b.norm1_g, c.hidden, 1.0);
    fill_uniform(b.dconv_w, static_cast<std::size_t>(c.hidden) * c.kernel, c.kernel);
    fill_const(b.prelu2, 1, 0.25);
    fill_const(b.norm2_g, c.hidden, 1.0);
    fill_uniform(b.conv2_w, static_cast<std::size_t>(c.bottleneck) * c.hidden, c.hidden);
  }
  fill_uniform(l.out_w, c.bottleneck, c.bottleneck);
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward for one chunk.

template <typename T>
struct BlockCache {
  Mat<T> h_in;  // B x L
  Mat<T> a;     // conv1 output, pre-PReLU
  Mat<T> n1;    // normalized PReLU(a)
  T rstd1 = 0;
  Mat<T> g1;    // norm1 output
  Mat<T> d;     // dconv output, pre-PReLU
  Mat<T> n2;
  T rstd2 = 0;
  Mat<T> g2;    // norm2 output
};

template <typename T>
struct ForwardCache {
  Mat<T> x;          // n_mels x L, masked input
  Mat<T> ln_hat;     // normalized input
  Vec<T> ln_rstd;    // per frame
  Mat<T> ln_out;     // input norm output
  std::vector<BlockCache<T>> blocks;
  Mat<T> h_out;      // B x L
  Vec<T> mask;       // L
  T num_valid = 0;
};

namespace ranker_detail {

inline constexpr double kInputNormEps = 1e-5;
inline constexpr double kGlobalNormEps = 1e-8;

template <typename T>
using RowMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using RowMapMut = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using VecMap = Eigen::Map<const Vec<T>>;
template <typename T>
using VecMapMut = Eigen::Map<Vec<T>>;

// sum_t a[:, t] * b[:, t]; column sweeps vectorize where rowwise() does not.
template <typename A, typename B>
auto RowDot(const A &a, const B &b) {
  using T = typename A::Scalar;
  Vec<T> acc = Vec<T>::Zero(a.rows());
  for (Eigen::Index t = 0; t < a.cols(); ++t) acc.array() += a.col(t).array() * b.col(t).array();
  return acc;
}

template <typename A>
auto RowSum(const A &a) {
  using T = typename A::Scalar;
  Vec<T> acc = Vec<T>::Zero(a.rows());
  for (Eigen::Index t = 0; t < a.cols(); ++t) acc += a.col(t);
  return acc;
}

template <typename T>
void PRelu(const Mat<T> &x, T slope, Mat<T> &y) {
  y = x.array().max(T(0)) + slope * x.array().min(T(0));
}

// Returns dx, accumulates d/d(slope). Branch-free: activation signs are
// close to random, so a branchy loop mispredicts half the time.
template <typename T>
Mat<T> PReluBackward(const Mat<T> &dy, const Mat<T> &x, T slope, T &dslope) {
  dslope += (dy.array() * x.array().min(T(0))).sum();
  Mat<T> dx(x.rows(), x.cols());
  const T *px = x.data();
  const T *pdy = dy.data();
  T *pdx = dx.data();
  const T rest = T(1) - slope;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    pdx[i] = pdy[i] * (slope + rest * static_cast<T>(px[i] > T(0)));
  return dx;
}

// Global layer norm over all entries, per-channel (row) affine.
template <typename T>
void GlobalNorm(const Mat<T> &x, const VecMap<T> &gain, const VecMap<T> &bias,
                Mat<T> &hat, T &rstd, Mat<T> &y) {
  const T n = static_cast<T>(x.size());
  const T mu = x.sum() / n;
  hat = x.array() - mu;
  const T var = hat.squaredNorm() / n;
  rstd = T(1) / std::sqrt(var + T(kGlobalNormEps));
  hat *= rstd;
  y = (hat.array().colwise() * gain.array()).colwise() + bias.array();
}

// Returns dx; accumulates gain/bias gradients.
template <typename T>
Mat<T> GlobalNormBackward(const Mat<T> &dy, const Mat<T> &hat, T rstd,
                          const VecMap<T> &gain, VecMapMut<T> dgain,
                          VecMapMut<T> dbias) {
  dgain += RowDot(dy, hat);
  dbias += RowSum(dy);
  Mat<T> dhat = dy.array().colwise() * gain.array();
  const T n = static_cast<T>(dy.size());
  const T mean_dhat = dhat.sum() / n;
  const T mean_dhat_hat = (dhat.array() * hat.array()).sum() / n;
  return (rstd * (dhat.array() - mean_dhat - hat.array() * mean_dhat_hat)).matrix();
}

// y[:, t] = bias + sum_j w[:, j] * x[:, t + (j - c) * dilation], zero padded.
// Written as column sweeps over contiguous storage so they vectorize.
template <typename T>
void DepthwiseConv(const Mat<T> &x, const RowMap<T> &w, const VecMap<T> &bias,
                   int dilation, Mat<T> &y) {
  const Eigen::Index rows = x.rows();
  const int len = static_cast<int>(x.cols());
  const int k = static_cast<int>(w.cols());
  const int centre = (k - 1) / 2;
  y = bias.replicate(1, len);
  for (int j = 0; j < k; ++j) {
    const int off = (j - centre) * dilation;
    const Vec<T> wj = w.col(j);
    const T *pw = wj.data();
    for (int t = std::max(0, -off); t < std::min(len, len - off); ++t) {
      const T *px = x.data() + (t + off) * rows;
      T *py = y.data() + t * rows;
      for (Eigen::Index c = 0; c < rows; ++c) py[c] += pw[c] * px[c];
    }
  }
}

template <typename T>
Mat<T> DepthwiseConvBackward(const Mat<T> &dy, const Mat<T> &x, const RowMap<T> &w,
                             int dilation, RowMapMut<T> dw, VecMapMut<T> dbias) {
  const Eigen::Index rows = x.rows();
  const int len = static_cast<int>(x.cols());
  const int k = static_cast<int>(w.cols());
  const int centre = (k - 1) / 2;
  dbias += RowSum(dy);
  Mat<T> dx = Mat<T>::Zero(x.rows(), x.cols());
  Vec<T> acc(rows);
  for (int j = 0; j < k; ++j) {
    const int off = (j - centre) * dilation;
    const Vec<T> wj = w.col(j);
    const T *pw = wj.data();
    acc.setZero();
    T *pa = acc.data();
    for (int t = std::max(0, -off); t < std::min(len, len - off); ++t) {
      const T *pdy = dy.data() + t * rows;
      const T *px = x.data() + (t + off) * rows;
      T *pdx = dx.data() + (t + off) * rows;
      for (Eigen::Index c = 0; c < rows; ++c) {
        pa[c] += pdy[c] * px[c];
        pdx[c] += pdy[c] * pw[c];
      }
    }
    dw.col(j) += acc;
  }
  return dx;
}

}  // namespace ranker_detail

/// Scores one chunk. `chunk` is chunk_frames x n_mels (frames as rows);
/// mask[t] != 0 marks real frames. Padded frames are zeroed on entry and left
/// out of the final mean.
template <typename T>
T ForwardChunk(const RankerModel<T> &model, const Mat<T> &chunk,
               const std::vector<std::uint8_t> &mask, ForwardCache<T> *cache = nullptr) {
  using namespace ranker_detail;
  const auto &c = model.config;
  const auto &l = model.layout;
  const T *p = model.params.data();
  CHANRANK_CHECK(chunk.rows() == c.chunk_frames && chunk.cols() == c.n_mels,
                 Errc::kShapeMismatch, "chunk must be ", c.chunk_frames, "x", c.n_mels,
                 ", got ", chunk.rows(), "x", chunk.cols());
  CHANRANK_CHECK(mask.size() == static_cast<std::size_t>(c.chunk_frames),
                 Errc::kShapeMismatch, "mask length ", mask.size(), " != ", c.chunk_frames);
  const int len = c.chunk_frames;

  ForwardCache<T> local;
  ForwardCache<T> &fc = cache ? *cache : local;
  fc.mask.resize(len);
  for (int t = 0; t < len; ++t) fc.mask(t) = mask[static_cast<std::size_t>(t)] ? T(1) : T(0);
  fc.num_valid = fc.mask.sum();
  CHANRANK_CHECK(fc.num_valid > T(0), Errc::kInvalidArgument, "chunk has no valid frames");

  fc.x = chunk.transpose();
  fc.x.array().rowwise() *= fc.mask.transpose().array();

  // Per-frame layer norm over the mel axis.
  {
    const T n = static_cast<T>(c.n_mels);
    RowVec<T> mu = fc.x.colwise().sum() / n;
    fc.ln_hat = fc.x.rowwise() - mu;
    RowVec<T> var = fc.ln_hat.colwise().squaredNorm() / n;
    fc.ln_rstd = (var.array() + T(kInputNormEps)).rsqrt().transpose();
    fc.ln_hat.array().rowwise() *= fc.ln_rstd.transpose().array();
    VecMap<T> g(p + l.in_norm_g, c.n_mels), b(p + l.in_norm_b, c.n_mels);
    fc.ln_out = (fc.ln_hat.array().colwise() * g.array()).colwise() + b.array();
  }

  Mat<T> h = RowMap<T>(p + l.in_proj_w, c.bottleneck, c.n_mels) * fc.ln_out;
  h.colwise() += VecMap<T>(p + l.in_proj_b, c.bottleneck);

  const bool keep = cache != nullptr;
  if (keep) fc.blocks.resize(l.blocks.size());
  BlockCache<T> scratch;
  Mat<T> act;
  for (std::size_t r = 0; r < l.blocks.size(); ++r) {
    const BlockOffsets &o = l.blocks[r];
    BlockCache<T> &bc = keep ? fc.blocks[r] : scratch;
    bc.h_in = h;
    bc.a.noalias() = RowMap<T>(p + o.conv1_w, c.hidden, c.bottleneck) * h;
    bc.a.colwise() += VecMap<T>(p + o.conv1_b, c.hidden);
    PRelu(bc.a, p[o.prelu1], act);
    GlobalNorm(act, VecMap<T>(p + o.norm1_g, c.hidden), VecMap<T>(p + o.norm1_b, c.hidden),
               bc.n1, bc.rstd1, bc.g1);
    DepthwiseConv(bc.g1, RowMap<T>(p + o.dconv_w, c.hidden, c.kernel),
                  VecMap<T>(p + o.dconv_b, c.hidden), o.dilation, bc.d);
    PRelu(bc.d, p[o.prelu2], act);
    GlobalNorm(act, VecMap<T>(p + o.norm2_g, c.hidden), VecMap<T>(p + o.norm2_b, c.hidden),
               bc.n2, bc.rstd2, bc.g2);
    h.noalias() += RowMap<T>(p + o.conv2_w, c.bottleneck, c.hidden) * bc.g2;
    h.colwise() += VecMap<T>(p + o.conv2_b, c.bottleneck);
  }

  RowVec<T> frame_scores = RowMap<T>(p + l.out_w, 1, c.bottleneck) * h;
  frame_scores.array() += p[l.out_b];
  const T score = (frame_scores.array() * fc.mask.transpose().array()).sum() / fc.num_valid;
  if (keep) fc.h_out = std::move(h);
  return score;
}

/// Accumulates d(score)/d(params) * dscore into `grad` (same layout as
/// model.params). Writes d/d(chunk) into `dinput` when given.
template <typename T>
void BackwardChunk(const RankerModel<T> &model, const ForwardCache<T> &fc, T dscore,
                   std::vector<T> &grad, Mat<T> *dinput = nullptr) {
  using namespace ranker_detail;
  const auto &c = model.config;
  const auto &l = model.layout;
  const T *p = model.params.data();
  CHANRANK_CHECK(grad.size() == model.params.size(), Errc::kShapeMismatch,
                 "gradient buffer has wrong size");
  CHANRANK_CHECK(fc.blocks.size() == l.blocks.size(), Errc::kInvalidArgument,
                 "forward cache does not match the model");
  T *g = grad.data();

  RowVec<T> dframe = fc.mask.transpose() * (dscore / fc.num_valid);
  RowMapMut<T>(g + l.out_w, 1, c.bottleneck) += dframe * fc.h_out.transpose();
  g[l.out_b] += dframe.sum();
  Mat<T> dh = RowMap<T>(p + l.out_w, 1, c.bottleneck).transpose() * dframe;

  for (std::size_t r = l.blocks.size(); r-- > 0;) {
    const BlockOffsets &o = l.blocks[r];
    const BlockCache<T> &bc = fc.blocks[r];
    const RowMap<T> w2(p + o.conv2_w, c.bottleneck, c.hidden);
    RowMapMut<T>(g + o.conv2_w, c.bottleneck, c.hidden).noalias() += dh * bc.g2.transpose();
    VecMapMut<T>(g + o.conv2_b, c.bottleneck) += RowSum(dh);
    Mat<T> dg2 = w2.transpose() * dh;

    Mat<T> dq = GlobalNormBackward(dg2, bc.n2, bc.rstd2, VecMap<T>(p + o.norm2_g, c.hidden),
                                   VecMapMut<T>(g + o.norm2_g, c.hidden),
                                   VecMapMut<T>(g + o.norm2_b, c.hidden));
    Mat<T> dd = PReluBackward(dq, bc.d, p[o.prelu2], g[o.prelu2]);

    Mat<T> dg1 = DepthwiseConvBackward(dd, bc.g1, RowMap<T>(p + o.dconv_w, c.hidden, c.kernel),
                                       o.dilation, RowMapMut<T>(g + o.dconv_w, c.hidden, c.kernel),
                                       VecMapMut<T>(g + o.dconv_b, c.hidden));
    Mat<T> dp = GlobalNormBackward(dg1, bc.n1, bc.rstd1, VecMap<T>(p + o.norm1_g, c.hidden),
                                   VecMapMut<T>(g + o.norm1_g, c.hidden),
                                   VecMapMut<T>(g + o.norm1_b, c.hidden));
    Mat<T> da = PReluBackward(dp, bc.a, p[o.prelu1], g[o.prelu1]);

    RowMapMut<T>(g + o.conv1_w, c.hidden, c.bottleneck).noalias() += da * bc.h_in.transpose();
    VecMapMut<T>(g + o.conv1_b, c.hidden) += RowSum(da);
    dh.noalias() += RowMap<T>(p + o.conv1_w, c.hidden, c.bottleneck).transpose() * da;
  }

  RowMapMut<T>(g + l.in_proj_w, c.bottleneck, c.n_mels).noalias() += dh * fc.ln_out.transpose();
  VecMapMut<T>(g + l.in_proj_b, c.bottleneck) += RowSum(dh);
  Mat<T> dln = RowMap<T>(p + l.in_proj_w, c.bottleneck, c.n_mels).transpose() * dh;

  VecMap<T> gain(p + l.in_norm_g, c.n_mels);
  VecMapMut<T>(g + l.in_norm_g, c.n_mels) += RowDot(dln, fc.ln_hat);
  VecMapMut<T>(g + l.in_norm_b, c.n_mels) += RowSum(dln);
  if (!dinput) return;

  Mat<T> dhat = dln.array().colwise() * gain.array();
  const T n = static_cast<T>(c.n_mels);
  RowVec<T> mean_dhat = dhat.colwise().sum() / n;
  RowVec<T> mean_dhat_hat = (dhat.array() * fc.ln_hat.array()).colwise().sum().matrix() / n;
  Mat<T> dx = dhat.rowwise() - mean_dhat;
  dx -= (fc.ln_hat.array().rowwise() * mean_dhat_hat.array()).matrix();
  dx.array().rowwise() *= (fc.ln_rstd.array() * fc.mask.array()).transpose();
  *dinput = dx.transpose();
}

// ---------------------------------------------------------------------------
// Chunking and utterance-level scoring.

enum class ChunkMode { kTrain, kInfer };

struct ChunkSpan {
  int start = 0;
  int valid = 0;
  bool operator==(const ChunkSpan &) const = default;
};

/// Train: consecutive non-overlapping chunks, last one padded.
/// Infer: starts every chunk/overlap frames, the last chunk moved to end at T.
/// T < chunk gives one padded chunk in both modes.
inline std::vector<ChunkSpan> ChunkSpans(int num_frames, ChunkMode mode,
                                         const RankerConfig &c = {}) {
  CHANRANK_CHECK(num_frames >= 1, Errc::kInvalidArgument, "cannot chunk an empty utterance");
  const int len = c.chunk_frames;
  std::vector<ChunkSpan> out;
  if (num_frames <= len) {
    out.push_back({0, num_frames});
    return out;
  }
  if (mode == ChunkMode::kTrain) {
    for (int s = 0; s < num_frames; s += len) out.push_back({s, std::min(len, num_frames - s)});
    return out;
  }
  const int stride = c.InferenceStride();
  const int count = (num_frames - len) / stride + 1;
  for (int i = 0; i < count; ++i) out.push_back({i * stride, len});
  out.back().start = num_frames - len;
  return out;
}

/// Copies one chunk out of a T x n_mels matrix, zero padded to chunk_frames.
template <typename T, typename Derived>
Mat<T> ExtractChunk(const Eigen::MatrixBase<Derived> &feats, const ChunkSpan &span,
                    const RankerConfig &c, std::vector<std::uint8_t> *mask) {
  Mat<T> out = Mat<T>::Zero(c.chunk_frames, feats.cols());
  out.topRows(span.valid) = feats.middleRows(span.start, span.valid).template cast<T>();
  if (mask) {
    mask->assign(static_cast<std::size_t>(c.chunk_frames), 0);
    std::fill(mask->begin(), mask->begin() + span.valid, 1);
  }
  return out;
}

template <typename T>
struct ChunkBatch {
  std::vector<Mat<T>> chunks;
  std::vector<std::pair<int, int>> utterance_map;  // chunk -> (utterance, channel)
  std::vector<std::vector<std::uint8_t>> pad_mask;  // 1 = real frame
  std::vector<ChunkSpan> spans;
};

template <typename T>
ChunkBatch<T> ChunkUtterance(const LogMelFeatures &feats, ChunkMode mode,
                             const RankerConfig &c = {}, int utterance = 0, int channel = 0) {
  CHANRANK_CHECK(feats.frames.cols() == c.n_mels, Errc::kShapeMismatch,
                 "features have ", feats.frames.cols(), " bands, model expects ", c.n_mels);
  ChunkBatch<T> out;
  out.spans = ChunkSpans(feats.num_frames(), mode, c);
  for (const auto &s : out.spans) {
    out.pad_mask.emplace_back();
    out.chunks.push_back(ExtractChunk<T>(feats.frames, s, c, &out.pad_mask.back()));
    out.utterance_map.emplace_back(utterance, channel);
  }
  return out;
}

/// Mean inference-mode chunk score of one channel.
template <typename T, typename Derived>
double ScoreChannel(const RankerModel<T> &model, const Eigen::MatrixBase<Derived> &frames) {
  const auto &c = model.config;
  CHANRANK_CHECK(frames.rows() >= 1, Errc::kInvalidArgument, "empty features");
  CHANRANK_CHECK(frames.cols() == c.n_mels, Errc::kConfigMismatch, "features have ",
                 frames.cols(), " bands, model expects ", c.n_mels);
  double acc = 0;
  std::vector<ChunkSpan> spans = ChunkSpans(static_cast<int>(frames.rows()), ChunkMode::kInfer, c);
  std::vector<std::uint8_t> mask;
  for (const auto &s : spans) {
    Mat<T> chunk = ExtractChunk<T>(frames, s, c, &mask);
    acc += static_cast<double>(ForwardChunk(model, chunk, mask));
  }
  return acc / static_cast<double>(spans.size());
}

/// Applies the scorer to every channel independently.
template <typename T>
ChannelScores ScoreUtterance(const RankerModel<T> &model,
                             const std::vector<LogMelFeatures> &channels) {
  CHANRANK_CHECK(!channels.empty(), Errc::kInvalidArgument, "no channels to score");
  ChannelScores out{{}, "ranker"};
  for (const auto &ch : channels) out.scores.push_back(ScoreChannel(model, ch.frames));
  return out;
}

}  // namespace chanrank
