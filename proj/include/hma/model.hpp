#pragma once

#include "hma/answer.hpp"
#include "hma/config.hpp"
#include "hma/params.hpp"

namespace hma {

struct ForwardResult {
  Tensor text_scores;      // 1×2, pre-softmax per-choice text-aspect scores
  Tensor question_scores;  // 1×2, question aspect
  Tensor combined;         // 1×2, softmax sums; entries total 2
  int predicted = 0;       // argmax of combined, ties toward choice 0
  AspectReprs aspects;     // kept for inspection dumps
};

/// The full model. Construction registers every array under a stable name
/// ("embedding.*", "hw.*", "lstm_text.*", "lstm_q.*", "lstm_c.*",
/// "answer.*") in a fixed order, which also fixes the checkpoint layout.
/// The word table is supplied by the caller and frozen; everything else is
/// seeded random or constant init.
class HmaModel {
 public:
  HmaModel(const Config& cfg, Tensor word_table);

  /// Pure given fixed parameters; records onto the active tape if any.
  ForwardResult forward(const Instance& inst, const Vocab& vocab) const;

  Tensor loss(const ForwardResult& result, int label) const;

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const Config& config() const { return cfg_; }
  const EmbeddingTables& tables() const { return emb_; }

 private:
  Config cfg_;
  ModelParams params_;
  EmbeddingTables emb_;
  HighwayParams highway_;
  BiLstmWeights text_lstm_, question_lstm_, choice_lstm_;
  AnswerParams answer_;
};

}  // namespace hma
