#include "hma/encoder.hpp"

namespace hma {

Tensor highway(const Tensor& embedded, const HighwayParams& params) {
  Tensor gate = sigmoid(add_rowvec(matmul(embedded, params.w_gate),
                                   params.b_gate));
  Tensor transformed = add_rowvec(matmul(embedded, params.w_transform),
                                  params.b_transform);
  Tensor blended = add(mul(gate, transformed), mul(sub(1.0, gate), embedded));
  return tanh(blended);
}

Tensor bilstm(const Tensor& seq, const BiLstmWeights& weights,
              std::size_t valid_len) {
  const std::size_t n = seq.rows();
  if (valid_len > n) {
    throw RangeError("bilstm: valid_len " + std::to_string(valid_len) +
                     " exceeds " + std::to_string(n) + " rows");
  }
  const std::size_t hidden = weights.fwd.u_input.rows();
  if (valid_len == 0) return Tensor::zeros({n, 2 * hidden});

  std::vector<Tensor> fwd_h(valid_len), bwd_h(valid_len);
  Tensor h = Tensor::zeros({1, hidden});
  Tensor c = Tensor::zeros({1, hidden});
  for (std::size_t t = 0; t < valid_len; ++t) {
    const Tensor x = slice_rows(seq, t, t + 1);
    std::tie(h, c) = lstm_cell(x, h, c, weights.fwd);
    fwd_h[t] = h;
  }
  h = Tensor::zeros({1, hidden});
  c = Tensor::zeros({1, hidden});
  for (std::size_t t = valid_len; t-- > 0;) {
    const Tensor x = slice_rows(seq, t, t + 1);
    std::tie(h, c) = lstm_cell(x, h, c, weights.bwd);
    bwd_h[t] = h;
  }

  std::vector<Tensor> rows;
  rows.reserve(valid_len + 1);
  for (std::size_t t = 0; t < valid_len; ++t) {
    rows.push_back(concat_last({fwd_h[t], bwd_h[t]}));
  }
  if (valid_len < n) {
    rows.push_back(Tensor::zeros({n - valid_len, 2 * hidden}));
  }
  return concat_rows(rows);
}

ContextualReprs encode(const EmbeddedBatch& batch, const HighwayParams& hw,
                       const BiLstmWeights& text_lstm,
                       const BiLstmWeights& question_lstm,
                       const BiLstmWeights& choice_lstm) {
  ContextualReprs ctx;
  ctx.text = bilstm(highway(batch.text, hw), text_lstm, batch.text_len);
  ctx.question = bilstm(highway(batch.question, hw), question_lstm,
                        batch.question_len);
  for (std::size_t k = 0; k < 2; ++k) {
    ctx.choices[k] = bilstm(highway(batch.choices[k], hw), choice_lstm,
                            batch.choice_len[k]);
  }
  ctx.text_len = batch.text_len;
  ctx.question_len = batch.question_len;
  ctx.choice_len = batch.choice_len;
  return ctx;
}

}  // namespace hma
