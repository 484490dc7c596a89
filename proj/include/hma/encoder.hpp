#pragma once

#include <array>

#include "hma/embedding.hpp"
#include "hma/tensor.hpp"

namespace hma {

/// Single gated transform shared across text, question and choices. The
/// gate bias starts at −1 (carry-biased).
struct HighwayParams {
  Tensor w_transform, b_transform;  // e×e, 1×e
  Tensor w_gate, b_gate;            // e×e, 1×e
};

/// tanh(g ⊙ (E·W_t + b_t) + (1−g) ⊙ E) with g = sigmoid(E·W_g + b_g).
Tensor highway(const Tensor& embedded, const HighwayParams& params);

struct BiLstmWeights {
  LstmCellWeights fwd, bwd;  // hidden size = output dim / 2 per direction
};

/// Runs the forward cell over rows [0, valid_len) and the backward cell
/// over the same rows reversed — padding is never visited — and
/// concatenates the two hidden states per position. Rows at or beyond
/// valid_len are zero. RangeError when valid_len exceeds the row count.
Tensor bilstm(const Tensor& seq, const BiLstmWeights& weights,
              std::size_t valid_len);

struct ContextualReprs {
  Tensor text;                    // t × h
  Tensor question;                // q × h
  std::array<Tensor, 2> choices;  // c × h each
  std::size_t text_len = 0;
  std::size_t question_len = 0;
  std::array<std::size_t, 2> choice_len{0, 0};
};

/// Shared highway, then the text/question/choice LSTMs; the two choices run
/// through the one choice LSTM.
ContextualReprs encode(const EmbeddedBatch& batch, const HighwayParams& hw,
                       const BiLstmWeights& text_lstm,
                       const BiLstmWeights& question_lstm,
                       const BiLstmWeights& choice_lstm);

}  // namespace hma
