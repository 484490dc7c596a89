#include "hma/answer.hpp"

namespace hma {

Tensor deep_match(const Tensor& choice_repr, const Tensor& question_self) {
  if (choice_repr.cols() != question_self.cols()) {
    throw DimensionError("deep_match: width mismatch: " +
                         shape_str(choice_repr.shape()) + " vs " +
                         shape_str(question_self.shape()));
  }
  return matmul(choice_repr, transpose(question_self));
}

Tensor score_choice(const Tensor& match, const Tensor& weight,
                    const Tensor& valid_mask) {
  return sum_all(mul(mul(match, weight), valid_mask));
}

Combined combine(const Tensor& text_scores, const Tensor& question_scores) {
  Combined out;
  out.scores = add(row_softmax(text_scores), row_softmax(question_scores));
  const auto v = out.scores.values();
  out.predicted = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] > v[out.predicted]) out.predicted = static_cast<int>(j);
  }
  return out;
}

Tensor cross_entropy(const Tensor& combined, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= combined.cols()) {
    throw ContractError("cross_entropy: label " + std::to_string(label) +
                        " out of range for " + shape_str(combined.shape()));
  }
  for (double v : combined.values()) {
    if (!(v > 0.0)) {
      throw ContractError("cross_entropy: non-positive score entry " +
                          std::to_string(v));
    }
  }
  Tensor picked = slice_cols(combined, static_cast<std::size_t>(label),
                             static_cast<std::size_t>(label) + 1);
  return sub(log(sum_all(combined)), log(picked));
}

}  // namespace hma
