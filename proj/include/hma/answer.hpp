#pragma once

#include "hma/attention.hpp"

namespace hma {

/// Element-wise weights over the choice×question matching grids, one per
/// aspect; initialized to all ones so the starting model is plain
/// sum-pooling.
struct AnswerParams {
  Tensor text_aspect_weight;      // c × q
  Tensor question_aspect_weight;  // c × q
};

/// Matching grid between an aspect view and the self-attended question:
/// rows·rowsᵀ → c × q. DimensionError when widths differ.
Tensor deep_match(const Tensor& choice_repr, const Tensor& question_self);

/// sum(match ⊙ weight ⊙ valid_mask) → [1×1].
Tensor score_choice(const Tensor& match, const Tensor& weight,
                    const Tensor& valid_mask);

struct Combined {
  Tensor scores;      // 1×2: softmax(text) + softmax(question), sums to 2
  int predicted = 0;  // argmax, ties toward choice 0
};

Combined combine(const Tensor& text_scores, const Tensor& question_scores);

/// Cross entropy over the renormalized combined scores:
/// −log(scores[label] / Σ scores). ContractError on a non-positive entry.
Tensor cross_entropy(const Tensor& combined, int label);

}  // namespace hma
