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

// Shallow attentional encoder-decoder over token sequences.
//
// Encoder: source embeddings feed a bidirectional GRU; annotations are the
// concatenated forward and backward states. Decoder: a GRU initialised from
// tanh(W * mean annotation + b), with additive attention computed from the
// previous decoder state. The output layer reads [state; context; input
// embedding]. Gradients are written by hand and checked against finite
// differences in the tests, so the model is templated on the scalar type:
// float for training, double for gradient checking.

#ifndef MORPHBOOT_NEURAL_HPP_
#define MORPHBOOT_NEURAL_HPP_

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "morphboot/datagen.hpp"
#include "morphboot/exec.hpp"

namespace morphboot::neural {

struct Hyper {
  std::size_t src_vocab = 1024;  // capacity, sentinels included
  std::size_t trg_vocab = 1024;
  std::size_t embed = 32;
  std::size_t hidden = 64;
  double dropout_rnn = 0.2;  // variational, on recurrent inputs
  double dropout_src = 0.1;  // whole-word dropout on source embeddings
  double dropout_trg = 0.1;
  std::size_t patience = 5;
  std::size_t beam = 12;
  std::size_t max_epochs = 30;
  std::size_t batch_size = 32;
  std::size_t max_updates = 0;  // 0: no limit
  std::size_t valid_every = 0;  // updates between validations; 0: once per epoch
  double learning_rate = 0.003;
  double clip_norm = 5.0;
  double ema_decay = 0.999;
  std::uint64_t seed = 1;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab();

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

enum class Side { kSource, kTarget };

// Collects every token on one side; throws TrainingError past `capacity`.
Vocab build_vocab(std::span<const TrainingPair> pairs, Side side, std::size_t capacity);

template <typename T>
struct Params {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  static constexpr std::size_t kBlocks = 22;

  Mat src_emb, trg_emb;                  // E x V
  Mat fwd_W, fwd_U, fwd_b, fwd_bh;       // encoder forward GRU
  Mat bwd_W, bwd_U, bwd_b, bwd_bh;       // encoder backward GRU
  Mat init_W, init_b;                    // decoder initial state
  Mat att_W, att_U, att_b, att_v;        // additive attention
  Mat dec_W, dec_U, dec_b, dec_bh;       // decoder GRU, input [emb; ctx]
  Mat out_W, out_b;                      // logits from [state; ctx; emb]

  static const std::array<const char*, kBlocks>& names();
  std::array<Mat*, kBlocks> blocks();
  std::array<const Mat*, kBlocks> blocks() const;

  // Same shapes, all zero.
  Params zeros() const;
  std::size_t size() const;
  bool all_finite() const;
};

template <typename T>
struct Model {
  Hyper hyper;
  Vocab src;
  Vocab trg;
  std::size_t max_target_length = 64;  // decoding stops after this many tokens + 10
  Params<T> params;

  template <typename U>
  Model<U> cast() const;
};

// Allocates parameters for the vocab sizes and dims in `model` and fills
// them with Glorot-uniform values (biases zero) drawn from `seed`.
template <typename T>
void initialize(Model<T>& model, std::uint64_t seed);

// Padded id matrices, one column per item. Both sides end in eos.
struct EvalBatch {
  Eigen::MatrixXi src;       // Ts x B
  Eigen::MatrixXi trg;       // Tt x B
  Eigen::MatrixXi src_mask;  // 1 where src is a real token
  Eigen::MatrixXi trg_mask;
  std::vector<int> src_len;
  std::vector<int> trg_len;
  std::size_t tokens() const;
};

EvalBatch make_batch(const Vocab& src, const Vocab& trg, std::span<const TrainingPair> pairs,
                     std::span<const std::size_t> indices);

// Mean per-token cross-entropy over non-pad target positions. When `grads`
// is non-null it is overwritten with the analytic gradient. Dropout is
// applied only when `dropout_rng` is non-null; the masks are drawn from it
// in a fixed order, so a copy of the same generator reproduces them.
template <typename T>
T loss_and_grads(const Model<T>& model, const EvalBatch& batch, Params<T>* grads,
                 std::mt19937_64* dropout_rng = nullptr);

// Teacher-forced accuracy of the argmax token at non-pad target positions.
template <typename T>
double token_accuracy(const Model<T>& model, std::span<const TrainingPair> pairs);

template <typename T>
double cross_entropy(const Model<T>& model, std::span<const TrainingPair> pairs);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t updates = 0;
  double train_loss = 0;
  double dev_cross_entropy = 0;
  bool improved = false;
};

struct TrainLog {
  std::vector<EpochLog> validations;
  std::size_t best_validation = 0;
  bool early_stopped = false;
};

// Single-threaded and deterministic given hyper.seed. Returns the smoothed
// parameters from the validation with the lowest dev cross-entropy.
Model<float> train(std::span<const TrainingPair> train_pairs, std::span<const TrainingPair> dev_pairs,
                   const Hyper& hyper, TrainLog* log = nullptr);

// Beam search with length-normalised scores. Never returns an empty sequence.
template <typename T>
std::vector<std::string> predict(const Model<T>& model, std::span<const std::string> source,
                                 std::size_t beam);

// Argmax chain under the same constraints as predict; equals beam 1.
template <typename T>
std::vector<std::string> greedy(const Model<T>& model, std::span<const std::string> source);

template <typename T>
std::vector<std::vector<std::string>> predict_batch(const Model<T>& model,
                                                    std::span<const std::vector<std::string>> sources,
                                                    std::size_t beam, Exec exec = Exec::kParallel);

void save_model(const Model<float>& model, std::ostream& os);
Model<float> load_model(std::istream& is);
void save_model(const Model<float>& model, const std::string& path);
Model<float> load_model(const std::string& path);

}  // namespace morphboot::neural

#endif  // MORPHBOOT_NEURAL_HPP_
