#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hma/model.hpp"

namespace hma {

enum class QuestionType : int {
  What = 0,
  Who,
  Why,
  How,
  Where,
  When,
  Which,
  YesNo,
  Other,
};

inline constexpr int kQuestionTypeCount = 9;

const char* question_type_name(QuestionType t);

/// Classifies by the first preprocessed token; leading auxiliaries
/// (did/do/does/is/was/were/are/can/could/would/will/had/has/have) mark a
/// yes/no question. Empty or unrecognized → Other.
QuestionType classify_question(const std::vector<std::string>& tokens);

struct EvalReport {
  /// Absent when the corpus carries no labels.
  std::optional<double> accuracy;
  std::size_t total = 0;
  std::size_t labeled = 0;
  std::size_t correct = 0;
  std::array<std::size_t, kQuestionTypeCount> type_counts{};
  std::array<std::size_t, kQuestionTypeCount> type_labeled{};
  std::array<std::size_t, kQuestionTypeCount> type_correct{};
};

struct Prediction {
  std::string id;
  std::array<double, 2> scores{0.0, 0.0};
  int predicted = 0;
};

/// Deterministic forward pass per instance, in corpus order.
/// attn_dump_dir, when nonempty, receives per-instance CSVs of the
/// choice-over-text and question self-attention matrices.
std::pair<EvalReport, std::vector<Prediction>> evaluate_model(
    const HmaModel& model, const Vocab& vocab,
    const std::vector<Instance>& instances,
    const std::string& attn_dump_dir = "");

void write_predictions(const std::string& path,
                       const std::vector<Prediction>& predictions);
/// Reads (id, predicted) pairs from a prediction JSONL file.
std::vector<std::pair<std::string, int>> read_prediction_labels(
    const std::string& path);

struct TrainResult {
  std::size_t best_epoch = 0;  // 0 = the pre-training initialization
  double best_dev_accuracy = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_dev_accuracy;
};

/// Full run per the config: loads corpora and vectors (failing before any
/// training on bad inputs), then per-epoch shuffled single-instance Adam
/// steps, a dev evaluation per epoch, best-dev checkpointing (ties keep the
/// earlier epoch) and a CSV trace (epoch,train_loss,dev_acc). The dev set is
/// also evaluated once at initialization, so a zero-epoch run still selects
/// and saves the init checkpoint. The vocabulary is written next to the
/// checkpoint as "<checkpoint>.vocab".
TrainResult train(const Config& cfg);

/// Loads a checkpoint plus its vocab sidecar, evaluates a corpus, writes
/// predictions to out_path, and returns the report.
EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& data_path, const std::string& out_path,
                    const Config& cfg, const std::string& attn_dump_dir = "");

/// Majority vote per id. ContractError on an even member count; ParseError
/// listing the offending ids when the id sets differ.
std::vector<std::pair<std::string, int>> majority_vote(
    const std::vector<std::vector<std::pair<std::string, int>>>& members);

/// File-level ensembling: reads each member, votes, writes merged JSONL.
void ensemble(const std::vector<std::string>& prediction_files,
              const std::string& out_path);

struct AnalyzeReport {
  std::array<std::size_t, kQuestionTypeCount> counts{};
  std::size_t total = 0;

  double proportion(QuestionType t) const {
    return total == 0 ? 0.0
                      : static_cast<double>(counts[static_cast<int>(t)]) /
                            static_cast<double>(total);
  }
};

AnalyzeReport analyze(const std::vector<Instance>& instances);

}  // namespace hma
