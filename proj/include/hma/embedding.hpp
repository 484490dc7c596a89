#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hma/config.hpp"
#include "hma/data.hpp"
#include "hma/rng.hpp"
#include "hma/tensor.hpp"

namespace hma {

/// Character inventory: pad, unk, then [a-z0-9'].
std::size_t char_inventory_size();
std::vector<std::size_t> char_ids(const std::string& token);

/// The per-token embedding tables. The word table is loaded and frozen; the
/// char table, conv filters and tag table train. Row 0 of each table is the
/// all-zero padding row and is never updated.
struct EmbeddingTables {
  Tensor word_table;    // |V| × word_dim
  Tensor char_table;    // |C| × char_dim
  Tensor char_filters;  // width × char_dim × char_conv_dim
  Tensor char_bias;     // char_conv_dim
  Tensor pos_table;     // 17 × pos_dim
};

/// Reads "token f1 … f<word_dim>" lines into a |V|×word_dim table.
/// In-vocab rows come from the file; out-of-vocab rows copy the unk row,
/// which is drawn once from N(0, 0.1) when the file lacks an "unk" entry.
/// ParseError with the line number on a wrong vector width.
Tensor load_word_vectors(const std::string& path, const Vocab& vocab,
                         std::size_t word_dim, Rng& rng);

/// word row ++ char-CNN output ++ tag row ++ [match, fuzzy] → [1 × e].
Tensor embed_token(std::size_t word_id, std::span<const std::size_t> chars,
                   std::size_t pos_id, double match_bit, double fuzzy_bit,
                   const EmbeddingTables& tables);

struct EmbeddedBatch {
  Tensor text;                    // t × e
  Tensor question;                // q × e
  std::array<Tensor, 2> choices;  // c × e each
  std::size_t text_len = 0;
  std::size_t question_len = 0;
  std::array<std::size_t, 2> choice_len{0, 0};
};

/// Stacks embed_token over each sequence, zero-padded to the configured
/// maxima; rows at or beyond the valid length are exactly zero.
EmbeddedBatch embed_instance(const Instance& inst,
                             const EmbeddingTables& tables,
                             const Vocab& vocab, const Config& cfg);

}  // namespace hma
