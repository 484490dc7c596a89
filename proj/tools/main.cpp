#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hma/harness.hpp"

namespace {

void print_report(const hma::EvalReport& report) {
  std::printf("instances: %zu\n", report.total);
  if (report.accuracy) {
    std::printf("accuracy: %.6f (%zu/%zu)\n", *report.accuracy, report.correct,
                report.labeled);
  } else {
    std::printf("accuracy: n/a (unlabeled corpus)\n");
  }
  for (int t = 0; t < hma::kQuestionTypeCount; ++t) {
    if (report.type_counts[t] == 0) continue;
    const auto type = static_cast<hma::QuestionType>(t);
    if (report.type_labeled[t] > 0) {
      std::printf("  %-7s %5zu  acc %.6f\n", hma::question_type_name(type),
                  report.type_counts[t],
                  static_cast<double>(report.type_correct[t]) /
                      static_cast<double>(report.type_labeled[t]));
    } else {
      std::printf("  %-7s %5zu\n", hma::question_type_name(type),
                  report.type_counts[t]);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hma — hybrid multi-aspects model for two-choice machine "
               "reading comprehension"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config_path, "key=value config file")
      ->required();

  std::string checkpoint_path, data_path, out_path, eval_config_path,
      attn_dump_dir;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--data", data_path, "corpus JSONL")->required();
  eval_cmd->add_option("--out", out_path, "prediction JSONL to write")
      ->required();
  eval_cmd->add_option("--config", eval_config_path,
                       "config file (defaults match the standard model)");
  eval_cmd->add_option("--dump-attn", attn_dump_dir,
                       "directory for per-instance attention CSV dumps");

  std::string ensemble_out;
  std::vector<std::string> member_files;
  auto* ensemble_cmd =
      app.add_subcommand("ensemble", "majority-vote prediction files");
  ensemble_cmd->add_option("--out", ensemble_out, "merged JSONL to write")
      ->required();
  ensemble_cmd->add_option("files", member_files, "prediction JSONL files")
      ->required()
      ->expected(-1);

  std::string analyze_data;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "question-type proportions of a corpus");
  analyze_cmd->add_option("--data", analyze_data, "corpus JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const hma::Config cfg = hma::Config::from_file(config_path);
      const hma::TrainResult result = hma::train(cfg);
      std::printf("best dev accuracy %.6f at epoch %zu\n",
                  result.best_dev_accuracy, result.best_epoch);
      std::printf("checkpoint: %s\n", cfg.checkpoint_path.c_str());
    } else if (*eval_cmd) {
      const hma::Config cfg = eval_config_path.empty()
                                  ? hma::Config{}
                                  : hma::Config::from_file(eval_config_path);
      const hma::EvalReport report = hma::evaluate(
          checkpoint_path, data_path, out_path, cfg, attn_dump_dir);
      print_report(report);
    } else if (*ensemble_cmd) {
      hma::ensemble(member_files, ensemble_out);
      std::printf("wrote %s from %zu members\n", ensemble_out.c_str(),
                  member_files.size());
    } else if (*analyze_cmd) {
      hma::Vocab vocab;
      const auto instances =
          hma::load_corpus(analyze_data, hma::VocabMode::Frozen, vocab);
      const hma::AnalyzeReport report = hma::analyze(instances);
      std::printf("questions: %zu\n", report.total);
      for (int t = 0; t < hma::kQuestionTypeCount; ++t) {
        const auto type = static_cast<hma::QuestionType>(t);
        std::printf("  %-7s %5zu  %.4f\n", hma::question_type_name(type),
                    report.counts[t], report.proportion(type));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
