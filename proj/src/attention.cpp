#include "hma/attention.hpp"

namespace hma {

CrossAttention cross_attend(const Tensor& query, const Tensor& keys,
                            std::size_t query_valid, std::size_t key_valid) {
  if (query.cols() != keys.cols()) {
    throw DimensionError("cross_attend: width mismatch: " +
                         shape_str(query.shape()) + " vs " +
                         shape_str(keys.shape()));
  }
  if (query_valid > query.rows()) {
    throw RangeError("cross_attend: query_valid " +
                     std::to_string(query_valid) + " exceeds " +
                     shape_str(query.shape()));
  }
  if (key_valid > keys.rows()) {
    throw RangeError("cross_attend: key_valid " + std::to_string(key_valid) +
                     " exceeds " + shape_str(keys.shape()));
  }
  Tensor logits = mask_fill_cols(matmul(query, transpose(keys)), key_valid,
                                 kMaskedLogit);
  Tensor attn = row_softmax(logits);
  Tensor context = matmul(attn, keys);
  Tensor fused = zero_rows_after(concat_last({context, query}), query_valid);
  return {std::move(attn), std::move(fused)};
}

AspectReprs build_aspects(const ContextualReprs& ctx) {
  AspectReprs a;
  for (std::size_t k = 0; k < 2; ++k) {
    CrossAttention over_text = cross_attend(ctx.choices[k], ctx.text,
                                            ctx.choice_len[k], ctx.text_len);
    a.choice_text_attn[k] = std::move(over_text.weights);
    a.choice_text[k] = std::move(over_text.fused);
    a.choice_question[k] = cross_attend(ctx.choices[k], ctx.question,
                                        ctx.choice_len[k], ctx.question_len)
                               .fused;
  }
  a.question_text = cross_attend(ctx.question, ctx.text, ctx.question_len,
                                 ctx.text_len)
                        .fused;

  // Self-similarity of the question-aware text view scores the question
  // positions; the attended values are the contextual question rows.
  Tensor self_logits = mask_fill_cols(
      matmul(a.question_text, transpose(a.question_text)), ctx.question_len,
      kMaskedLogit);
  a.question_self_attn = row_softmax(self_logits);
  Tensor attended = matmul(a.question_self_attn, ctx.question);
  a.question_self = zero_rows_after(concat_last({attended, ctx.question}),
                                    ctx.question_len);
  return a;
}

}  // namespace hma
