// Copyright 2026 The morphboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "morphboot/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "morphboot/error.hpp"
#include "morphboot/transducer.hpp"

namespace morphboot::neural {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
using Eigen::Index;

template <typename T>
Mat<T> sigmoid(const Mat<T>& x) {
  return (T(1) / (T(1) + (-x.array()).exp())).matrix();
}

// Column-wise log-softmax.
template <typename T>
Mat<T> log_softmax(const Mat<T>& x) {
  Mat<T> out(x.rows(), x.cols());
  for (Index b = 0; b < x.cols(); ++b) {
    const T m = x.col(b).maxCoeff();
    const T lse = m + std::log((x.col(b).array() - m).exp().sum());
    out.col(b) = (x.col(b).array() - lse).matrix();
  }
  return out;
}

template <typename T>
struct GruStep {
  Mat<T> x, h, hd, r, z, n, ghn, out;
};

template <typename T>
struct GruParams {
  const Mat<T>& W;
  const Mat<T>& U;
  const Mat<T>& b;
  const Mat<T>& bh;
};

template <typename T>
struct GruGrads {
  Mat<T>& W;
  Mat<T>& U;
  Mat<T>& b;
  Mat<T>& bh;
};

// r, z, n gates in that row order; n = tanh(Wn x + bn + r * (Un h + bhn)).
template <typename T>
void gru_forward(const GruParams<T>& g, const Mat<T>& x, const Mat<T>& h, const Mat<T>* rmask,
                 GruStep<T>& st) {
  const Index H = g.U.cols();
  st.x = x;
  st.h = h;
  st.hd = rmask ? Mat<T>((h.array() * rmask->array()).matrix()) : h;
  Mat<T> gi = g.W * x;
  gi.colwise() += g.b.col(0);
  Mat<T> gh = g.U * st.hd;
  gh.colwise() += g.bh.col(0);
  st.r = sigmoid<T>(gi.topRows(H) + gh.topRows(H));
  st.z = sigmoid<T>(gi.middleRows(H, H) + gh.middleRows(H, H));
  st.ghn = gh.bottomRows(H);
  st.n = (gi.bottomRows(H).array() + st.r.array() * st.ghn.array()).tanh().matrix();
  st.out = ((T(1) - st.z.array()) * st.n.array() + st.z.array() * h.array()).matrix();
}

// Accumulates parameter gradients; writes dx and dh (gradient w.r.t. h).
template <typename T>
void gru_backward(const GruParams<T>& g, const GruStep<T>& st, const Mat<T>& dout,
                  const Mat<T>* rmask, GruGrads<T>& gg, Mat<T>& dx, Mat<T>& dh) {
  const Index H = g.U.cols();
  const Index B = dout.cols();
  const auto z = st.z.array();
  const auto n = st.n.array();
  const auto r = st.r.array();
  const auto d = dout.array();
  const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> dan = d * (T(1) - z) * (T(1) - n * n);
  Mat<T> dgi(3 * H, B), dgh(3 * H, B);
  dgi.topRows(H) = (dan * st.ghn.array() * r * (T(1) - r)).matrix();
  dgi.middleRows(H, H) = (d * (st.h.array() - n) * z * (T(1) - z)).matrix();
  dgi.bottomRows(H) = dan.matrix();
  dgh.topRows(2 * H) = dgi.topRows(2 * H);
  dgh.bottomRows(H) = (dan * r).matrix();
  gg.W.noalias() += dgi * st.x.transpose();
  gg.b += dgi.rowwise().sum();
  dx.noalias() = g.W.transpose() * dgi;
  gg.U.noalias() += dgh * st.hd.transpose();
  gg.bh += dgh.rowwise().sum();
  Mat<T> dhd = g.U.transpose() * dgh;
  if (rmask) dhd.array() *= rmask->array();
  dh = (d * z).matrix() + dhd;
}

template <typename T>
struct Encoded {
  std::vector<Mat<T>> annot;  // 2H x B per source position
  std::vector<Mat<T>> keys;   // A x B: att_U * annot + att_b
  Mat<T> mean;                // 2H x B
  Mat<T> s0;                  // H x B
  Eigen::MatrixXi mask;       // Ts x B
};

struct Dropout {
  Eigen::MatrixXd src_word, trg_word;  // Ts x B, Tt x B: 0 or 1/(1-p)
  Eigen::MatrixXd fwd, bwd, dec;       // H x B
};

Eigen::MatrixXd draw_mask(std::mt19937_64& rng, Index rows, Index cols, double p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = u(rng) < p ? 0.0 : keep;
  }
  return m;
}

template <typename T>
Mat<T> embed_ids(const Mat<T>& table, const Eigen::MatrixXi& ids, Index row, const Eigen::MatrixXd* word) {
  Mat<T> x(table.rows(), ids.cols());
  for (Index b = 0; b < ids.cols(); ++b) {
    x.col(b) = table.col(ids(row, b));
    if (word) x.col(b) *= static_cast<T>((*word)(row, b));
  }
  return x;
}

template <typename T>
struct EncoderCache {
  std::vector<GruStep<T>> fwd, bwd;
};

template <typename T>
Encoded<T> encode(const Params<T>& p, const Eigen::MatrixXi& src, const Eigen::MatrixXi& mask,
                  const Dropout* drop, EncoderCache<T>* cache) {
  const Index Ts = src.rows(), B = src.cols(), H = p.fwd_U.cols();
  Encoded<T> enc;
  enc.mask = mask;
  Mat<T> fm, bm;
  if (drop) {
    fm = drop->fwd.cast<T>();
    bm = drop->bwd.cast<T>();
  }
  std::vector<Mat<T>> hf(Ts), hb(Ts);
  GruStep<T> st;
  if (cache) {
    cache->fwd.resize(Ts);
    cache->bwd.resize(Ts);
  }
  const GruParams<T> fwd{p.fwd_W, p.fwd_U, p.fwd_b, p.fwd_bh};
  const GruParams<T> bwd{p.bwd_W, p.bwd_U, p.bwd_b, p.bwd_bh};
  auto run = [&](const GruParams<T>& g, Index j, const Mat<T>& h, const Mat<T>* rm,
                 GruStep<T>& s) {
    const Mat<T> x = embed_ids(p.src_emb, src, j, drop ? &drop->src_word : nullptr);
    gru_forward(g, x, h, rm, s);
    Mat<T> next = s.out;
    for (Index b = 0; b < B; ++b) {
      if (!mask(j, b)) next.col(b) = h.col(b);
    }
    return next;
  };
  Mat<T> h = Mat<T>::Zero(H, B);
  for (Index j = 0; j < Ts; ++j) {
    h = run(fwd, j, h, drop ? &fm : nullptr, cache ? cache->fwd[j] : st);
    hf[j] = h;
  }
  h = Mat<T>::Zero(H, B);
  for (Index j = Ts - 1; j >= 0; --j) {
    h = run(bwd, j, h, drop ? &bm : nullptr, cache ? cache->bwd[j] : st);
    hb[j] = h;
  }
  enc.annot.resize(Ts);
  enc.keys.resize(Ts);
  enc.mean = Mat<T>::Zero(2 * H, B);
  for (Index j = 0; j < Ts; ++j) {
    enc.annot[j].resize(2 * H, B);
    enc.annot[j].topRows(H) = hf[j];
    enc.annot[j].bottomRows(H) = hb[j];
    enc.keys[j] = p.att_U * enc.annot[j];
    enc.keys[j].colwise() += p.att_b.col(0);
    for (Index b = 0; b < B; ++b) {
      if (mask(j, b)) enc.mean.col(b) += enc.annot[j].col(b);
    }
  }
  for (Index b = 0; b < B; ++b) {
    const T len = static_cast<T>(mask.col(b).sum());
    enc.mean.col(b) /= len;
  }
  Mat<T> pre = p.init_W * enc.mean;
  pre.colwise() += p.init_b.col(0);
  enc.s0 = pre.array().tanh().matrix();
  return enc;
}

template <typename T>
struct DecStep {
  std::vector<Mat<T>> P;  // tanh(keys + q), per source position
  Mat<T> alpha;           // Ts x B
  Mat<T> c, e, f, logp;
  GruStep<T> gru;
};

// One decoder step from state sp with input embedding e.
template <typename T>
void decoder_step(const Params<T>& p, const Encoded<T>& enc, const Mat<T>& sp, const Mat<T>& e,
                  const Mat<T>* rmask, DecStep<T>& d) {
  const Index Ts = static_cast<Index>(enc.annot.size());
  const Index B = sp.cols(), H = p.dec_U.cols(), E = e.rows();
  const Mat<T> q = p.att_W * sp;
  d.P.resize(Ts);
  Mat<T> scores(Ts, B);
  for (Index j = 0; j < Ts; ++j) {
    d.P[j] = (enc.keys[j] + q).array().tanh().matrix();
    scores.row(j) = p.att_v.transpose() * d.P[j];
  }
  d.alpha = Mat<T>::Zero(Ts, B);
  for (Index b = 0; b < B; ++b) {
    T m = -std::numeric_limits<T>::infinity();
    for (Index j = 0; j < Ts; ++j) {
      if (enc.mask(j, b)) m = std::max(m, scores(j, b));
    }
    T sum = 0;
    for (Index j = 0; j < Ts; ++j) {
      if (!enc.mask(j, b)) continue;
      d.alpha(j, b) = std::exp(scores(j, b) - m);
      sum += d.alpha(j, b);
    }
    d.alpha.col(b) /= sum;
  }
  d.c = Mat<T>::Zero(2 * H, B);
  for (Index j = 0; j < Ts; ++j) {
    d.c += (enc.annot[j].array().rowwise() * d.alpha.row(j).array()).matrix();
  }
  d.e = e;
  Mat<T> x(E + 2 * H, B);
  x.topRows(E) = e;
  x.bottomRows(2 * H) = d.c;
  gru_forward(GruParams<T>{p.dec_W, p.dec_U, p.dec_b, p.dec_bh}, x, sp, rmask, d.gru);
  d.f.resize(3 * H + E, B);
  d.f.topRows(H) = d.gru.out;
  d.f.middleRows(H, 2 * H) = d.c;
  d.f.bottomRows(E) = e;
  Mat<T> logits = p.out_W * d.f;
  logits.colwise() += p.out_b.col(0);
  d.logp = log_softmax<T>(logits);
}

// Teacher-forced forward pass over a batch, optionally with backward.
template <typename T>
T forward_backward(const Model<T>& model, const EvalBatch& batch, Params<T>* grads,
                   std::mt19937_64* rng, std::size_t* correct) {
  const Params<T>& p = model.params;
  const Hyper& hy = model.hyper;
  const Index Ts = batch.src.rows(), Tt = batch.trg.rows(), B = batch.src.cols();
  const Index H = p.dec_U.cols(), E = p.trg_emb.rows();

  Dropout drop;
  if (rng) {
    drop.src_word = draw_mask(*rng, Ts, B, hy.dropout_src);
    drop.trg_word = draw_mask(*rng, Tt, B, hy.dropout_trg);
    drop.fwd = draw_mask(*rng, H, B, hy.dropout_rnn);
    drop.bwd = draw_mask(*rng, H, B, hy.dropout_rnn);
    drop.dec = draw_mask(*rng, H, B, hy.dropout_rnn);
  }
  const Dropout* dp = rng ? &drop : nullptr;
  const Mat<T> dec_mask = rng ? Mat<T>(drop.dec.cast<T>()) : Mat<T>();
  const Mat<T>* rm = rng ? &dec_mask : nullptr;

  EncoderCache<T> ecache;
  const Encoded<T> enc = encode(p, batch.src, batch.src_mask, dp, grads ? &ecache : nullptr);

  const T inv_n = T(1) / static_cast<T>(batch.tokens());
  std::vector<DecStep<T>> steps(grads ? Tt : 1);
  std::vector<Mat<T>> states;
  if (grads) states.reserve(Tt + 1);
  Mat<T> s = enc.s0;
  if (grads) states.push_back(s);
  Eigen::MatrixXi yprev(Tt, B);
  T loss = 0;
  for (Index t = 0; t < Tt; ++t) {
    for (Index b = 0; b < B; ++b) yprev(t, b) = t == 0 ? Vocab::kBos : batch.trg(t - 1, b);
    const Mat<T> e = embed_ids(p.trg_emb, yprev, t, dp ? &drop.trg_word : nullptr);
    DecStep<T>& d = steps[grads ? t : 0];
    decoder_step(p, enc, s, e, rm, d);
    s = d.gru.out;
    if (grads) states.push_back(s);
    for (Index b = 0; b < B; ++b) {
      if (!batch.trg_mask(t, b)) continue;
      const int y = batch.trg(t, b);
      loss -= d.logp(y, b);
      if (correct) {
        Index best;
        d.logp.col(b).maxCoeff(&best);
        *correct += best == y ? 1 : 0;
      }
    }
  }
  loss *= inv_n;
  if (!grads) return loss;

  Params<T>& g = *grads;
  g = p.zeros();
  std::vector<Mat<T>> dannot(Ts, Mat<T>(Mat<T>::Zero(2 * H, B)));
  std::vector<Mat<T>> dkeys(Ts, Mat<T>(Mat<T>::Zero(p.att_U.rows(), B)));
  GruGrads<T> gdec{g.dec_W, g.dec_U, g.dec_b, g.dec_bh};
  const GruParams<T> pdec{p.dec_W, p.dec_U, p.dec_b, p.dec_bh};
  Mat<T> ds = Mat<T>::Zero(H, B);
  Mat<T> dx, dsp;
  for (Index t = Tt - 1; t >= 0; --t) {
    const DecStep<T>& d = steps[t];
    Mat<T> dlogits = d.logp.array().exp().matrix();
    for (Index b = 0; b < B; ++b) {
      if (!batch.trg_mask(t, b)) {
        dlogits.col(b).setZero();
        continue;
      }
      dlogits(batch.trg(t, b), b) -= T(1);
      dlogits.col(b) *= inv_n;
    }
    g.out_W.noalias() += dlogits * d.f.transpose();
    g.out_b += dlogits.rowwise().sum();
    const Mat<T> df = p.out_W.transpose() * dlogits;
    ds += df.topRows(H);
    Mat<T> dc = df.middleRows(H, 2 * H);
    Mat<T> de = df.bottomRows(E);
    gru_backward(pdec, d.gru, ds, rm, gdec, dx, dsp);
    de += dx.topRows(E);
    dc += dx.bottomRows(2 * H);
    for (Index b = 0; b < B; ++b) {
      const T w = dp ? static_cast<T>(drop.trg_word(t, b)) : T(1);
      g.trg_emb.col(yprev(t, b)) += de.col(b) * w;
    }
    // Attention.
    Mat<T> dalpha(Ts, B);
    for (Index j = 0; j < Ts; ++j) {
      dalpha.row(j) = (dc.array() * enc.annot[j].array()).colwise().sum().matrix();
      dannot[j] += (dc.array().rowwise() * d.alpha.row(j).array()).matrix();
    }
    Mat<T> dscore(Ts, B);
    for (Index b = 0; b < B; ++b) {
      const T dot = d.alpha.col(b).dot(dalpha.col(b));
      dscore.col(b) = (d.alpha.col(b).array() * (dalpha.col(b).array() - dot)).matrix();
    }
    Mat<T> dq = Mat<T>::Zero(p.att_W.rows(), B);
    for (Index j = 0; j < Ts; ++j) {
      g.att_v.noalias() += d.P[j] * dscore.row(j).transpose();
      const Mat<T> dpre =
          ((p.att_v * dscore.row(j)).array() * (T(1) - d.P[j].array().square())).matrix();
      dkeys[j] += dpre;
      dq += dpre;
    }
    g.att_W.noalias() += dq * states[t].transpose();
    dsp.noalias() += p.att_W.transpose() * dq;
    ds = dsp;
  }
  // Initial state.
  const Mat<T> dpre0 = (ds.array() * (T(1) - enc.s0.array().square())).matrix();
  g.init_W.noalias() += dpre0 * enc.mean.transpose();
  g.init_b += dpre0.rowwise().sum();
  const Mat<T> dmean = p.init_W.transpose() * dpre0;
  for (Index j = 0; j < Ts; ++j) {
    for (Index b = 0; b < B; ++b) {
      if (batch.src_mask(j, b)) dannot[j].col(b) += dmean.col(b) / static_cast<T>(batch.src_len[b]);
    }
    g.att_U.noalias() += dkeys[j] * enc.annot[j].transpose();
    g.att_b += dkeys[j].rowwise().sum();
    dannot[j].noalias() += p.att_U.transpose() * dkeys[j];
  }
  // Encoder, both directions.
  const Mat<T> fm = dp ? Mat<T>(drop.fwd.cast<T>()) : Mat<T>();
  const Mat<T> bm = dp ? Mat<T>(drop.bwd.cast<T>()) : Mat<T>();
  auto back = [&](const GruParams<T>& gp, GruGrads<T> gg, const std::vector<GruStep<T>>& cache,
                  const Mat<T>* mask, bool forward_dir) {
    Mat<T> dh = Mat<T>::Zero(H, B);
    for (Index k = 0; k < Ts; ++k) {
      const Index j = forward_dir ? Ts - 1 - k : k;
      dh += forward_dir ? dannot[j].topRows(H) : dannot[j].bottomRows(H);
      Mat<T> dout = dh;
      for (Index b = 0; b < B; ++b) {
        if (!batch.src_mask(j, b)) dout.col(b).setZero();
      }
      Mat<T> dhp;
      gru_backward(gp, cache[j], dout, mask, gg, dx, dhp);
      for (Index b = 0; b < B; ++b) {
        if (batch.src_mask(j, b)) {
          dh.col(b) = dhp.col(b);
          const T w = dp ? static_cast<T>(drop.src_word(j, b)) : T(1);
          g.src_emb.col(batch.src(j, b)) += dx.col(b) * w;
        }
        // Masked positions carry dh through unchanged.
      }
    }
  };
  back(GruParams<T>{p.fwd_W, p.fwd_U, p.fwd_b, p.fwd_bh},
       GruGrads<T>{g.fwd_W, g.fwd_U, g.fwd_b, g.fwd_bh}, ecache.fwd, dp ? &fm : nullptr, true);
  back(GruParams<T>{p.bwd_W, p.bwd_U, p.bwd_b, p.bwd_bh},
       GruGrads<T>{g.bwd_W, g.bwd_U, g.bwd_b, g.bwd_bh}, ecache.bwd, dp ? &bm : nullptr, false);
  return loss;
}

// Source ids for one item, eos appended.
Eigen::MatrixXi source_column(const Vocab& v, std::span<const std::string> tokens) {
  const auto ids = v.encode(tokens);
  Eigen::MatrixXi m(static_cast<Index>(ids.size()) + 1, 1);
  for (std::size_t i = 0; i < ids.size(); ++i) m(static_cast<Index>(i), 0) = ids[i];
  m(static_cast<Index>(ids.size()), 0) = Vocab::kEos;
  return m;
}

// Replicates column 0 of every encoder matrix n times.
template <typename T>
Encoded<T> replicate(const Encoded<T>& one, Index n) {
  Encoded<T> out;
  out.annot.reserve(one.annot.size());
  out.keys.reserve(one.keys.size());
  for (const auto& a : one.annot) out.annot.push_back(a.col(0).replicate(1, n));
  for (const auto& k : one.keys) out.keys.push_back(k.col(0).replicate(1, n));
  out.mask = one.mask.col(0).replicate(1, n);
  return out;
}

bool allowed(int w, std::size_t step, std::size_t max_len) {
  if (w == Vocab::kPad || w == Vocab::kBos || w == Vocab::kUnk) return false;
  if (step == 0 && w == Vocab::kEos) return false;
  if (step + 1 >= max_len && w != Vocab::kEos) return false;
  return true;
}

void check_file(const std::ios& s, const std::string& path) {
  if (!s) throw ConfigError("cannot open model file '" + path + "'");
}

}  // namespace

void Hyper::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid hyperparameter: ") + what);
  };
  need(embed >= 1 && hidden >= 1, "dims must be >= 1");
  need(dropout_rnn >= 0 && dropout_rnn < 1, "dropout_rnn must be in [0, 1)");
  need(dropout_src >= 0 && dropout_src < 1, "dropout_src must be in [0, 1)");
  need(dropout_trg >= 0 && dropout_trg < 1, "dropout_trg must be in [0, 1)");
  need(beam >= 1, "beam must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(max_epochs >= 1, "max_epochs must be >= 1");
  need(patience >= 1, "patience must be >= 1");
  need(learning_rate > 0, "learning_rate must be > 0");
  need(clip_norm > 0, "clip_norm must be > 0");
  need(ema_decay >= 0 && ema_decay < 1, "ema_decay must be in [0, 1)");
  need(src_vocab > 4 && trg_vocab > 4, "vocab capacity must exceed the 4 sentinels");
}

Vocab::Vocab() {
  for (const char* s : {"<pad>", "<s>", "</s>", "<unk>"}) add(s);
}

int Vocab::add(const std::string& token) {
  const auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocab::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocab build_vocab(std::span<const TrainingPair> pairs, Side side, std::size_t capacity) {
  Vocab v;
  for (const auto& p : pairs) {
    for (const auto& t : side == Side::kSource ? p.source : p.target) {
      v.add(t);
      if (v.size() > capacity) {
        throw TrainingError(std::string(side == Side::kSource ? "source" : "target") +
                            " vocabulary overflow: more than " + std::to_string(capacity) +
                            " tokens (at '" + t + "')");
      }
    }
  }
  return v;
}

template <typename T>
const std::array<const char*, Params<T>::kBlocks>& Params<T>::names() {
  static const std::array<const char*, kBlocks> n{
      "src_emb", "trg_emb", "fwd_W",  "fwd_U", "fwd_b",  "fwd_bh", "bwd_W", "bwd_U",
      "bwd_b",   "bwd_bh",  "init_W", "init_b", "att_W", "att_U",  "att_b", "att_v",
      "dec_W",   "dec_U",   "dec_b",  "dec_bh", "out_W", "out_b"};
  return n;
}

template <typename T>
std::array<typename Params<T>::Mat*, Params<T>::kBlocks> Params<T>::blocks() {
  return {&src_emb, &trg_emb, &fwd_W,  &fwd_U,  &fwd_b, &fwd_bh, &bwd_W, &bwd_U,
          &bwd_b,   &bwd_bh,  &init_W, &init_b, &att_W, &att_U,  &att_b, &att_v,
          &dec_W,   &dec_U,   &dec_b,  &dec_bh, &out_W, &out_b};
}

template <typename T>
std::array<const typename Params<T>::Mat*, Params<T>::kBlocks> Params<T>::blocks() const {
  return {&src_emb, &trg_emb, &fwd_W,  &fwd_U,  &fwd_b, &fwd_bh, &bwd_W, &bwd_U,
          &bwd_b,   &bwd_bh,  &init_W, &init_b, &att_W, &att_U,  &att_b, &att_v,
          &dec_W,   &dec_U,   &dec_b,  &dec_bh, &out_W, &out_b};
}

template <typename T>
Params<T> Params<T>::zeros() const {
  Params<T> z;
  const auto src = blocks();
  const auto dst = z.blocks();
  for (std::size_t i = 0; i < kBlocks; ++i) dst[i]->setZero(src[i]->rows(), src[i]->cols());
  return z;
}

template <typename T>
std::size_t Params<T>::size() const {
  std::size_t n = 0;
  for (const Mat* m : blocks()) n += static_cast<std::size_t>(m->size());
  return n;
}

template <typename T>
bool Params<T>::all_finite() const {
  for (const Mat* m : blocks()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> m;
  m.hyper = hyper;
  m.src = src;
  m.trg = trg;
  m.max_target_length = max_target_length;
  const auto from = params.blocks();
  const auto to = m.params.blocks();
  for (std::size_t i = 0; i < Params<T>::kBlocks; ++i) *to[i] = from[i]->template cast<U>();
  return m;
}

template <typename T>
void initialize(Model<T>& model, std::uint64_t seed) {
  const Index E = static_cast<Index>(model.hyper.embed);
  const Index H = static_cast<Index>(model.hyper.hidden);
  const Index Vs = static_cast<Index>(model.src.size());
  const Index Vt = static_cast<Index>(model.trg.size());
  Params<T>& p = model.params;
  p.src_emb.resize(E, Vs);
  p.trg_emb.resize(E, Vt);
  for (Mat<T>* w : {&p.fwd_W, &p.bwd_W}) w->resize(3 * H, E);
  for (Mat<T>* u : {&p.fwd_U, &p.bwd_U, &p.dec_U}) u->resize(3 * H, H);
  for (Mat<T>* b : {&p.fwd_b, &p.fwd_bh, &p.bwd_b, &p.bwd_bh, &p.dec_b, &p.dec_bh}) b->resize(3 * H, 1);
  p.init_W.resize(H, 2 * H);
  p.init_b.resize(H, 1);
  p.att_W.resize(H, H);
  p.att_U.resize(H, 2 * H);
  p.att_b.resize(H, 1);
  p.att_v.resize(H, 1);
  p.dec_W.resize(3 * H, E + 2 * H);
  p.out_W.resize(Vt, 3 * H + E);
  p.out_b.resize(Vt, 1);

  std::mt19937_64 rng(seed);
  const auto names = Params<T>::names();
  const auto blocks = p.blocks();
  for (std::size_t i = 0; i < Params<T>::kBlocks; ++i) {
    Mat<T>& m = *blocks[i];
    const std::string name = names[i];
    const bool bias = name.ends_with("_b") || name.ends_with("_bh");
    if (bias) {
      m.setZero();
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(u(rng));
    }
  }
}

std::size_t EvalBatch::tokens() const { return static_cast<std::size_t>(trg_mask.sum()); }

EvalBatch make_batch(const Vocab& src, const Vocab& trg, std::span<const TrainingPair> pairs,
                     std::span<const std::size_t> indices) {
  EvalBatch b;
  const Index B = static_cast<Index>(indices.size());
  if (B == 0) throw InputError("empty batch");
  std::vector<std::vector<int>> s, t;
  int ts = 0, tt = 0;
  for (std::size_t i : indices) {
    s.push_back(src.encode(pairs[i].source));
    t.push_back(trg.encode(pairs[i].target));
    s.back().push_back(Vocab::kEos);
    t.back().push_back(Vocab::kEos);
    ts = std::max(ts, static_cast<int>(s.back().size()));
    tt = std::max(tt, static_cast<int>(t.back().size()));
  }
  b.src = Eigen::MatrixXi::Zero(ts, B);
  b.trg = Eigen::MatrixXi::Zero(tt, B);
  b.src_mask = Eigen::MatrixXi::Zero(ts, B);
  b.trg_mask = Eigen::MatrixXi::Zero(tt, B);
  for (Index c = 0; c < B; ++c) {
    for (std::size_t j = 0; j < s[c].size(); ++j) {
      b.src(static_cast<Index>(j), c) = s[c][j];
      b.src_mask(static_cast<Index>(j), c) = 1;
    }
    for (std::size_t j = 0; j < t[c].size(); ++j) {
      b.trg(static_cast<Index>(j), c) = t[c][j];
      b.trg_mask(static_cast<Index>(j), c) = 1;
    }
    b.src_len.push_back(static_cast<int>(s[c].size()));
    b.trg_len.push_back(static_cast<int>(t[c].size()));
  }
  return b;
}

template <typename T>
T loss_and_grads(const Model<T>& model, const EvalBatch& batch, Params<T>* grads,
                 std::mt19937_64* dropout_rng) {
  const T loss = forward_backward(model, batch, grads, dropout_rng, nullptr);
  if (!std::isfinite(static_cast<double>(loss))) throw TrainingError("non-finite loss");
  return loss;
}

namespace {

// Index batches of similar lengths, in file order (for evaluation).
std::vector<std::vector<std::size_t>> eval_batches(std::span<const TrainingPair> pairs,
                                                   std::size_t size) {
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].source.size() < pairs[b].source.size();
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < idx.size(); i += size) {
    out.emplace_back(idx.begin() + i, idx.begin() + std::min(idx.size(), i + size));
  }
  return out;
}

}  // namespace

template <typename T>
double cross_entropy(const Model<T>& model, std::span<const TrainingPair> pairs) {
  double sum = 0;
  std::size_t tokens = 0;
  for (const auto& ix : eval_batches(pairs, 64)) {
    const EvalBatch b = make_batch(model.src, model.trg, pairs, ix);
    sum += static_cast<double>(forward_backward<T>(model, b, nullptr, nullptr, nullptr)) *
           static_cast<double>(b.tokens());
    tokens += b.tokens();
  }
  return tokens ? sum / static_cast<double>(tokens) : 0.0;
}

template <typename T>
double token_accuracy(const Model<T>& model, std::span<const TrainingPair> pairs) {
  std::size_t correct = 0, tokens = 0;
  for (const auto& ix : eval_batches(pairs, 64)) {
    const EvalBatch b = make_batch(model.src, model.trg, pairs, ix);
    forward_backward<T>(model, b, nullptr, nullptr, &correct);
    tokens += b.tokens();
  }
  return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0;
}

Model<float> train(std::span<const TrainingPair> train_pairs, std::span<const TrainingPair> dev_pairs,
                   const Hyper& hyper, TrainLog* log) {
  hyper.validate();
  if (train_pairs.empty()) throw TrainingError("training set is empty");
  if (dev_pairs.empty()) throw TrainingError("dev set is empty");
  using P = Params<float>;
  Model<float> model;
  model.hyper = hyper;
  model.src = build_vocab(train_pairs, Side::kSource, hyper.src_vocab);
  model.trg = build_vocab(train_pairs, Side::kTarget, hyper.trg_vocab);
  model.max_target_length = 0;
  for (const auto& p : train_pairs) model.max_target_length = std::max(model.max_target_length, p.target.size() + 1);
  initialize(model, derive_seed(hyper.seed, 0));

  P m1 = model.params.zeros(), m2 = model.params.zeros();
  P ema = model.params;
  P best = ema;
  Model<float> probe = model;  // carries the smoothed parameters for validation
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double best_ce = std::numeric_limits<double>::infinity();
  std::size_t bad = 0, updates = 0, since_valid = 0;
  double loss_sum = 0;
  std::size_t loss_n = 0;
  TrainLog tl;
  bool stop = false;

  auto validate = [&](std::size_t epoch) {
    probe.params = ema;
    EpochLog e;
    e.epoch = epoch;
    e.updates = updates;
    e.train_loss = loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0;
    e.dev_cross_entropy = cross_entropy(probe, dev_pairs);
    if (!std::isfinite(e.dev_cross_entropy)) {
      throw TrainingError("non-finite dev cross-entropy at epoch " + std::to_string(epoch));
    }
    if (e.dev_cross_entropy < best_ce) {
      best_ce = e.dev_cross_entropy;
      best = ema;
      bad = 0;
      e.improved = true;
      tl.best_validation = tl.validations.size();
    } else if (++bad >= hyper.patience) {
      stop = true;
      tl.early_stopped = true;
    }
    tl.validations.push_back(e);
    loss_sum = 0;
    loss_n = 0;
    since_valid = 0;
  };

  for (std::size_t epoch = 1; epoch <= hyper.max_epochs && !stop; ++epoch) {
    std::mt19937_64 rng(derive_seed(hyper.seed, epoch));
    std::vector<std::size_t> idx(train_pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    // Sort within chunks so batches hold similar lengths, then shuffle batches.
    const std::size_t chunk = hyper.batch_size * 16;
    for (std::size_t i = 0; i < idx.size(); i += chunk) {
      std::stable_sort(idx.begin() + i, idx.begin() + std::min(idx.size(), i + chunk),
                       [&](std::size_t a, std::size_t b) {
                         return train_pairs[a].source.size() < train_pairs[b].source.size();
                       });
    }
    std::vector<std::span<const std::size_t>> batches;
    for (std::size_t i = 0; i < idx.size(); i += hyper.batch_size) {
      batches.emplace_back(idx.data() + i, std::min(hyper.batch_size, idx.size() - i));
    }
    std::shuffle(batches.begin(), batches.end(), rng);

    for (const auto& ix : batches) {
      const EvalBatch batch = make_batch(model.src, model.trg, train_pairs, ix);
      std::mt19937_64 drng(derive_seed(hyper.seed ^ 0x5eedd809u, updates));
      P g;
      const float loss = forward_backward<float>(model, batch, &g, &drng, nullptr);
      if (!std::isfinite(loss) || !g.all_finite()) {
        throw TrainingError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                            ", update " + std::to_string(updates) + " (loss " +
                            std::to_string(loss) + ")");
      }
      double norm2 = 0;
      for (const auto* b : g.blocks()) norm2 += static_cast<double>(b->squaredNorm());
      const double norm = std::sqrt(norm2);
      const float scale = norm > hyper.clip_norm ? static_cast<float>(hyper.clip_norm / norm) : 1.0f;
      ++updates;
      const double t = static_cast<double>(updates);
      const float lr_t = static_cast<float>(hyper.learning_rate * std::sqrt(1 - std::pow(b2, t)) /
                                            (1 - std::pow(b1, t)));
      const float decay = static_cast<float>(std::min(hyper.ema_decay, (1 + t) / (10 + t)));
      auto pb = model.params.blocks();
      auto gb = g.blocks();
      auto ab = m1.blocks();
      auto vb = m2.blocks();
      auto eb = ema.blocks();
      for (std::size_t k = 0; k < P::kBlocks; ++k) {
        const auto gr = (gb[k]->array() * scale).eval();
        ab[k]->array() = static_cast<float>(b1) * ab[k]->array() + static_cast<float>(1 - b1) * gr;
        vb[k]->array() = static_cast<float>(b2) * vb[k]->array() + static_cast<float>(1 - b2) * gr.square();
        pb[k]->array() -= lr_t * ab[k]->array() / (vb[k]->array().sqrt() + static_cast<float>(eps));
        eb[k]->array() = decay * eb[k]->array() + (1 - decay) * pb[k]->array();
      }
      loss_sum += loss;
      ++loss_n;
      ++since_valid;
      if (hyper.valid_every && since_valid >= hyper.valid_every) validate(epoch);
      if (stop) break;
      if (hyper.max_updates && updates >= hyper.max_updates) {
        if (since_valid) validate(epoch);
        stop = true;
        break;
      }
    }
    if (!stop && hyper.valid_every == 0) validate(epoch);
  }
  if (since_valid && !stop) validate(hyper.max_epochs);
  model.params = best;
  if (log) *log = std::move(tl);
  return model;
}

template <typename T>
std::vector<std::string> predict(const Model<T>& model, std::span<const std::string> source,
                                 std::size_t beam) {
  if (beam == 0) beam = 1;
  const Params<T>& p = model.params;
  const Eigen::MatrixXi src = source_column(model.src, source);
  const Eigen::MatrixXi mask = Eigen::MatrixXi::Ones(src.rows(), 1);
  const Encoded<T> one = encode<T>(p, src, mask, nullptr, nullptr);
  const std::size_t max_len = model.max_target_length + 10;
  const Index V = static_cast<Index>(model.trg.size());

  struct Hyp {
    std::vector<int> tokens;
    double score;
  };
  std::vector<Hyp> hyps{{{}, 0.0}};
  Mat<T> states = one.s0;
  std::vector<std::pair<double, std::vector<int>>> finished;
  Encoded<T> enc = one;
  DecStep<T> d;
  for (std::size_t step = 0; step < max_len && !hyps.empty(); ++step) {
    const Index n = static_cast<Index>(hyps.size());
    if (enc.annot.empty() || enc.annot[0].cols() != n) enc = replicate(one, n);
    Mat<T> e(p.trg_emb.rows(), n);
    for (Index i = 0; i < n; ++i) {
      e.col(i) = p.trg_emb.col(hyps[i].tokens.empty() ? Vocab::kBos : hyps[i].tokens.back());
    }
    decoder_step<T>(p, enc, states, e, nullptr, d);
    struct Cand {
      double total;
      Index hyp;
      int word;
    };
    std::vector<Cand> cands;
    cands.reserve(static_cast<std::size_t>(n * V));
    for (Index i = 0; i < n; ++i) {
      for (int w = 0; w < V; ++w) {
        if (!allowed(w, step, max_len)) continue;
        cands.push_back({hyps[i].score + static_cast<double>(d.logp(w, i)), i, w});
      }
    }
    const std::size_t k = std::min(cands.size(), beam - finished.size());
    std::partial_sort(cands.begin(), cands.begin() + k, cands.end(), [](const Cand& a, const Cand& b) {
      if (a.total != b.total) return a.total > b.total;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.word < b.word;
    });
    std::vector<Hyp> next;
    std::vector<Index> parent;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<int> toks = hyps[cands[c].hyp].tokens;
      if (cands[c].word == Vocab::kEos) {
        const double len = static_cast<double>(toks.size() + 1);
        finished.emplace_back(cands[c].total / len, std::move(toks));
        continue;
      }
      toks.push_back(cands[c].word);
      next.push_back({std::move(toks), cands[c].total});
      parent.push_back(cands[c].hyp);
    }
    if (finished.size() >= beam) break;
    Mat<T> ns(states.rows(), static_cast<Index>(next.size()));
    for (std::size_t i = 0; i < next.size(); ++i) ns.col(static_cast<Index>(i)) = d.gru.out.col(parent[i]);
    states = std::move(ns);
    hyps = std::move(next);
  }
  // The last step admits only eos, so something has always finished.
  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (finished[i].first > finished[best].first) best = i;
  }
  std::vector<std::string> out;
  for (int id : finished[best].second) out.push_back(model.trg.token(id));
  return out;
}

template <typename T>
std::vector<std::string> greedy(const Model<T>& model, std::span<const std::string> source) {
  const Params<T>& p = model.params;
  const Eigen::MatrixXi src = source_column(model.src, source);
  const Encoded<T> enc = encode<T>(p, src, Eigen::MatrixXi::Ones(src.rows(), 1), nullptr, nullptr);
  const std::size_t max_len = model.max_target_length + 10;
  Mat<T> s = enc.s0;
  int prev = Vocab::kBos;
  std::vector<std::string> out;
  DecStep<T> d;
  for (std::size_t step = 0; step < max_len; ++step) {
    decoder_step<T>(p, enc, s, p.trg_emb.col(prev), nullptr, d);
    int best = -1;
    for (int w = 0; w < d.logp.rows(); ++w) {
      if (!allowed(w, step, max_len)) continue;
      if (best < 0 || d.logp(w, 0) > d.logp(best, 0)) best = w;
    }
    if (best == Vocab::kEos) break;
    out.push_back(model.trg.token(best));
    s = d.gru.out;
    prev = best;
  }
  return out;
}

template <typename T>
std::vector<std::vector<std::string>> predict_batch(const Model<T>& model,
                                                    std::span<const std::vector<std::string>> sources,
                                                    std::size_t beam, Exec exec) {
  std::vector<std::vector<std::string>> out(sources.size());
  parallel_for(sources.size(), exec, [&](std::size_t i) { out[i] = predict(model, sources[i], beam); });
  return out;
}

// Persistence: a versioned text format, exact for float parameters.
void save_model(const Model<float>& model, std::ostream& os) {
  const Hyper& h = model.hyper;
  os << "morphboot-model 1\n";
  os << "hyper src_vocab " << h.src_vocab << "\nhyper trg_vocab " << h.trg_vocab << "\nhyper embed "
     << h.embed << "\nhyper hidden " << h.hidden << "\nhyper patience " << h.patience
     << "\nhyper beam " << h.beam << "\nhyper max_epochs " << h.max_epochs << "\nhyper batch_size "
     << h.batch_size << "\nhyper max_updates " << h.max_updates << "\nhyper valid_every "
     << h.valid_every << "\nhyper seed " << h.seed << "\n";
  char buf[64];
  auto real = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << "hyper " << key << ' ' << buf << '\n';
  };
  real("dropout_rnn", h.dropout_rnn);
  real("dropout_src", h.dropout_src);
  real("dropout_trg", h.dropout_trg);
  real("learning_rate", h.learning_rate);
  real("clip_norm", h.clip_norm);
  real("ema_decay", h.ema_decay);
  os << "max_target_length " << model.max_target_length << '\n';
  for (const Vocab* v : {&model.src, &model.trg}) {
    os << "vocab " << v->size() << '\n';
    for (std::size_t i = Vocab::kUnk + 1; i < v->size(); ++i) os << v->token(static_cast<int>(i)) << '\n';
  }
  const auto names = Params<float>::names();
  const auto blocks = model.params.blocks();
  for (std::size_t i = 0; i < Params<float>::kBlocks; ++i) {
    const auto& m = *blocks[i];
    os << "param " << names[i] << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(m(r, c)));
        os << (r ? " " : "") << buf;
      }
      os << '\n';
    }
  }
  os << "end\n";
}

Model<float> load_model(std::istream& is) {
  auto fail = [](const std::string& why) -> Model<float> { throw FormatError("model file: " + why); };
  std::string line, word;
  if (!std::getline(is, line) || line != "morphboot-model 1") return fail("bad header");
  Model<float> m;
  Hyper& h = m.hyper;
  while (is >> word && word == "hyper") {
    std::string key;
    is >> key;
    if (key == "src_vocab") is >> h.src_vocab;
    else if (key == "trg_vocab") is >> h.trg_vocab;
    else if (key == "embed") is >> h.embed;
    else if (key == "hidden") is >> h.hidden;
    else if (key == "patience") is >> h.patience;
    else if (key == "beam") is >> h.beam;
    else if (key == "max_epochs") is >> h.max_epochs;
    else if (key == "batch_size") is >> h.batch_size;
    else if (key == "max_updates") is >> h.max_updates;
    else if (key == "valid_every") is >> h.valid_every;
    else if (key == "seed") is >> h.seed;
    else if (key == "dropout_rnn") is >> h.dropout_rnn;
    else if (key == "dropout_src") is >> h.dropout_src;
    else if (key == "dropout_trg") is >> h.dropout_trg;
    else if (key == "learning_rate") is >> h.learning_rate;
    else if (key == "clip_norm") is >> h.clip_norm;
    else if (key == "ema_decay") is >> h.ema_decay;
    else return fail("unknown hyper '" + key + "'");
  }
  if (word != "max_target_length" || !(is >> m.max_target_length)) return fail("missing max_target_length");
  for (Vocab* v : {&m.src, &m.trg}) {
    std::size_t n = 0;
    if (!(is >> word >> n) || word != "vocab" || n < 4) return fail("bad vocab header");
    for (std::size_t i = 4; i < n; ++i) {
      if (!(is >> word)) return fail("truncated vocab");
      v->add(word);
    }
    if (v->size() != n) return fail("duplicate vocab entries");
  }
  const auto names = Params<float>::names();
  const auto blocks = m.params.blocks();
  for (std::size_t i = 0; i < Params<float>::kBlocks; ++i) {
    Index rows = 0, cols = 0;
    std::string name;
    if (!(is >> word >> name >> rows >> cols) || word != "param" || name != names[i]) {
      return fail(std::string("expected parameter ") + names[i]);
    }
    auto& mat = *blocks[i];
    mat.resize(rows, cols);
    for (Index c = 0; c < cols; ++c) {
      for (Index r = 0; r < rows; ++r) {
        if (!(is >> mat(r, c))) return fail(std::string("truncated parameter ") + names[i]);
      }
    }
  }
  if (!(is >> word) || word != "end") return fail("missing end marker");
  h.validate();
  return m;
}

void save_model(const Model<float>& model, const std::string& path) {
  std::ofstream os(path);
  check_file(os, path);
  save_model(model, os);
  if (!os) throw ConfigError("failed writing model file '" + path + "'");
}

Model<float> load_model(const std::string& path) {
  std::ifstream is(path);
  check_file(is, path);
  return load_model(is);
}

#define MORPHBOOT_INSTANTIATE(T)                                                                   \
  template struct Params<T>;                                                                       \
  template void initialize<T>(Model<T>&, std::uint64_t);                                           \
  template T loss_and_grads<T>(const Model<T>&, const EvalBatch&, Params<T>*, std::mt19937_64*);   \
  template double token_accuracy<T>(const Model<T>&, std::span<const TrainingPair>);               \
  template double cross_entropy<T>(const Model<T>&, std::span<const TrainingPair>);                \
  template std::vector<std::string> predict<T>(const Model<T>&, std::span<const std::string>,      \
                                               std::size_t);                                       \
  template std::vector<std::string> greedy<T>(const Model<T>&, std::span<const std::string>);      \
  template std::vector<std::vector<std::string>> predict_batch<T>(                                 \
      const Model<T>&, std::span<const std::vector<std::string>>, std::size_t, Exec);

MORPHBOOT_INSTANTIATE(float)
MORPHBOOT_INSTANTIATE(double)
#undef MORPHBOOT_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace morphboot::neural
