#pragma once

#include <array>

#include "hma/encoder.hpp"

namespace hma {

/// Attention logits at padded key positions are pushed to this value before
/// the softmax, so padding receives exactly zero probability whenever a row
/// has at least one valid key.
inline constexpr double kMaskedLogit = -1e30;

struct CrossAttention {
  Tensor weights;  // m × n, rows softmaxed over the valid keys
  Tensor fused;    // m × 2h: [attended context ; query], padded rows zeroed
};

/// Dot-product attention of each query row over the valid key rows.
/// DimensionError when the two widths differ.
CrossAttention cross_attend(const Tensor& query, const Tensor& keys,
                            std::size_t query_valid, std::size_t key_valid);

/// The three aspect views of one instance.
struct AspectReprs {
  std::array<Tensor, 2> choice_text_attn;  // c × t per choice
  std::array<Tensor, 2> choice_text;       // c × 2h per choice
  std::array<Tensor, 2> choice_question;   // c × 2h per choice
  Tensor question_text;                    // q × 2h
  Tensor question_self_attn;               // q × q
  Tensor question_self;                    // q × 2h
};

/// Per choice: attention over the text and over the question. Once: the
/// question-aware text view, whose self-similarity re-weights the question
/// into the self-attended question representation.
AspectReprs build_aspects(const ContextualReprs& ctx);

}  // namespace hma
