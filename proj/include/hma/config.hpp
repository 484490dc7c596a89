#pragma once

#include <cstdint>
#include <string>

#include "hma/data.hpp"

namespace hma {

/// Run configuration: sequence maxima, embedding composition, optimizer
/// settings, and file paths. Parsed from flat key=value text; unknown keys
/// are rejected.
struct Config {
  // sequence maxima
  std::size_t text_max = 300;
  std::size_t question_max = 20;
  std::size_t choice_max = 10;
  std::size_t num_choices = 2;

  // embedding composition: word + char-conv + pos + 2 feature bits
  std::size_t word_dim = 100;
  std::size_t char_dim = 8;
  std::size_t char_conv_dim = 100;
  std::size_t pos_dim = 16;
  static constexpr std::size_t kCharFilterWidth = 5;

  /// Bi-LSTM output size (both directions together); must be even.
  std::size_t hidden = 200;

  std::uint64_t seed = 42;
  std::size_t epochs = 30;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::string train_path;
  std::string dev_path;
  std::string vectors_path;
  std::string checkpoint_path;
  std::string trace_path;

  std::size_t embed_dim() const {
    return word_dim + char_conv_dim + pos_dim + 2;
  }

  CorpusLimits limits() const {
    return CorpusLimits{text_max, question_max, choice_max};
  }

  /// ContractError on violated invariants (two choices, positive maxima,
  /// even hidden size).
  void validate() const;

  static Config from_file(const std::string& path);
};

}  // namespace hma
