#include "hma/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "hma/adam.hpp"
#include "hma/checkpoint.hpp"
#include "hma/rng.hpp"

namespace hma {

namespace {

using json = nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* question_type_name(QuestionType t) {
  switch (t) {
    case QuestionType::What: return "what";
    case QuestionType::Who: return "who";
    case QuestionType::Why: return "why";
    case QuestionType::How: return "how";
    case QuestionType::Where: return "where";
    case QuestionType::When: return "when";
    case QuestionType::Which: return "which";
    case QuestionType::YesNo: return "yes/no";
    case QuestionType::Other: return "other";
  }
  return "other";
}

QuestionType classify_question(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return QuestionType::Other;
  static const std::unordered_set<std::string> yes_no = {
      "did", "do",  "does", "is",  "was",   "were", "are",
      "can", "could", "would", "will", "had", "has", "have"};
  const std::string& first = tokens.front();
  if (first == "what") return QuestionType::What;
  if (first == "who") return QuestionType::Who;
  if (first == "why") return QuestionType::Why;
  if (first == "how") return QuestionType::How;
  if (first == "where") return QuestionType::Where;
  if (first == "when") return QuestionType::When;
  if (first == "which") return QuestionType::Which;
  if (yes_no.count(first)) return QuestionType::YesNo;
  return QuestionType::Other;
}

// --------------------------------------------------------------------------
// Evaluation
// --------------------------------------------------------------------------

namespace {

std::string sanitize_id(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return s.empty() ? "_" : s;
}

void write_matrix_csv(const std::string& path, const Tensor& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("dump " + path + ": cannot open for writing");
  const auto v = m.values();
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << fmt_double(v[i * cols + j]);
    }
    out << '\n';
  }
}

void dump_attention(const std::string& dir, const Instance& inst,
                    const AspectReprs& aspects) {
  const std::string base = dir + "/" + sanitize_id(inst.id);
  write_matrix_csv(base + ".choice0_text_attn.csv",
                   aspects.choice_text_attn[0]);
  write_matrix_csv(base + ".choice1_text_attn.csv",
                   aspects.choice_text_attn[1]);
  write_matrix_csv(base + ".question_self_attn.csv",
                   aspects.question_self_attn);
}

}  // namespace

std::pair<EvalReport, std::vector<Prediction>> evaluate_model(
    const HmaModel& model, const Vocab& vocab,
    const std::vector<Instance>& instances, const std::string& attn_dump_dir) {
  if (!attn_dump_dir.empty()) {
    std::filesystem::create_directories(attn_dump_dir);
  }
  EvalReport report;
  std::vector<Prediction> predictions;
  predictions.reserve(instances.size());
  for (const Instance& inst : instances) {
    const ForwardResult fr = model.forward(inst, vocab);
    predictions.push_back(Prediction{
        inst.id, {fr.combined.at(0, 0), fr.combined.at(0, 1)}, fr.predicted});
    const auto type = static_cast<int>(classify_question(inst.question.tokens));
    report.total += 1;
    report.type_counts[type] += 1;
    if (inst.label) {
      report.labeled += 1;
      report.type_labeled[type] += 1;
      if (fr.predicted == *inst.label) {
        report.correct += 1;
        report.type_correct[type] += 1;
      }
    }
    if (!attn_dump_dir.empty()) {
      dump_attention(attn_dump_dir, inst, fr.aspects);
    }
  }
  if (report.labeled > 0) {
    report.accuracy = static_cast<double>(report.correct) /
                      static_cast<double>(report.labeled);
  }
  return {report, predictions};
}

void write_predictions(const std::string& path,
                       const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("predictions " + path + ": cannot open for writing");
  for (const Prediction& p : predictions) {
    json j;
    j["id"] = p.id;
    j["scores"] = {p.scores[0], p.scores[1]};
    j["predicted"] = p.predicted;
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw ParseError("predictions " + path + ": write failed");
}

std::vector<std::pair<std::string, int>> read_prediction_labels(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("predictions " + path + ": cannot open");
  std::vector<std::pair<std::string, int>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw ParseError(where + ": missing field \"id\"");
    }
    if (!j.contains("predicted") || !j["predicted"].is_number_integer()) {
      throw ParseError(where + ": missing field \"predicted\"");
    }
    const int p = j["predicted"].get<int>();
    if (p != 0 && p != 1) {
      throw ParseError(where + ": predicted must be 0 or 1");
    }
    out.emplace_back(j["id"].get<std::string>(), p);
  }
  return out;
}

// --------------------------------------------------------------------------
// Training
// --------------------------------------------------------------------------

TrainResult train(const Config& cfg) {
  cfg.validate();
  const auto need = [](const std::string& v, const char* what) {
    if (v.empty()) {
      throw ContractError(std::string("train: ") + what +
                          " path not set in config");
    }
  };
  need(cfg.train_path, "train");
  need(cfg.dev_path, "dev");
  need(cfg.vectors_path, "vectors");
  need(cfg.checkpoint_path, "checkpoint");

  Vocab vocab;
  auto train_set = load_corpus(cfg.train_path, VocabMode::Build, vocab,
                               cfg.limits());
  auto dev_set = load_corpus(cfg.dev_path, VocabMode::Frozen, vocab,
                             cfg.limits());
  if (train_set.empty()) {
    throw ContractError("train: empty training corpus");
  }
  for (const auto* set : {&train_set, &dev_set}) {
    for (const Instance& inst : *set) {
      if (!inst.label) {
        throw ContractError("train: unlabeled instance " + inst.id);
      }
    }
  }

  Rng vector_rng(cfg.seed);
  Tensor word_table = load_word_vectors(cfg.vectors_path, vocab, cfg.word_dim,
                                        vector_rng);
  HmaModel model(cfg, std::move(word_table));
  vocab.save(cfg.checkpoint_path + ".vocab");

  std::ofstream trace;
  if (!cfg.trace_path.empty()) {
    trace.open(cfg.trace_path, std::ios::trunc);
    if (!trace) {
      throw ParseError("trace " + cfg.trace_path + ": cannot open for writing");
    }
    trace << "epoch,train_loss,dev_acc\n";
  }

  const auto dev_accuracy = [&]() {
    return evaluate_model(model, vocab, dev_set).first.accuracy.value();
  };

  TrainResult result;
  result.best_epoch = 0;
  result.best_dev_accuracy = dev_accuracy();
  save_checkpoint(cfg.checkpoint_path, model.params());

  AdamState adam(AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2,
                            cfg.epsilon});
  Rng shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (const std::size_t idx : order) {
      GradientTape tape;
      TapeScope scope(tape);
      model.params().zero_grads();
      const ForwardResult fr = model.forward(train_set[idx], vocab);
      const Tensor step_loss = model.loss(fr, *train_set[idx].label);
      backward(step_loss);
      adam_step(model.params(), adam);
      loss_sum += step_loss.item();
    }
    const double avg_loss = loss_sum / static_cast<double>(train_set.size());
    const double acc = dev_accuracy();
    result.epoch_loss.push_back(avg_loss);
    result.epoch_dev_accuracy.push_back(acc);
    if (trace.is_open()) {
      trace << epoch << ',' << fmt_double(avg_loss) << ',' << fmt_double(acc)
            << '\n';
    }
    if (acc > result.best_dev_accuracy) {  // ties keep the earlier epoch
      result.best_dev_accuracy = acc;
      result.best_epoch = epoch;
      save_checkpoint(cfg.checkpoint_path, model.params());
    }
  }
  if (trace.is_open()) {
    trace.flush();
    if (!trace) {
      throw ParseError("trace " + cfg.trace_path + ": write failed");
    }
  }
  return result;
}

EvalReport evaluate(const std::string& checkpoint_path,
                    const std::string& data_path, const std::string& out_path,
                    const Config& cfg, const std::string& attn_dump_dir) {
  cfg.validate();
  if (!std::ifstream(checkpoint_path).good()) {
    throw ParseError("checkpoint " + checkpoint_path + ": cannot open");
  }
  Vocab vocab = Vocab::load(checkpoint_path + ".vocab");
  HmaModel model(cfg, Tensor::zeros({vocab.size(), cfg.word_dim}));
  load_checkpoint(checkpoint_path, model.params());
  auto instances = load_corpus(data_path, VocabMode::Frozen, vocab,
                               cfg.limits());
  auto [report, predictions] = evaluate_model(model, vocab, instances,
                                              attn_dump_dir);
  write_predictions(out_path, predictions);
  return report;
}

// --------------------------------------------------------------------------
// Ensembling
// --------------------------------------------------------------------------

std::vector<std::pair<std::string, int>> majority_vote(
    const std::vector<std::vector<std::pair<std::string, int>>>& members) {
  if (members.empty() || members.size() % 2 == 0) {
    throw ContractError("ensemble: member count must be odd, got " +
                        std::to_string(members.size()));
  }
  const auto& first = members.front();
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (!position.emplace(first[i].first, i).second) {
      throw ParseError("ensemble: duplicate id \"" + first[i].first +
                       "\" in member 1");
    }
  }
  std::vector<int> ones(first.size(), 0);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& member = members[m];
    std::unordered_set<std::string> seen;
    std::string missing;
    for (const auto& [id, pred] : member) {
      if (!seen.insert(id).second) {
        throw ParseError("ensemble: duplicate id \"" + id + "\" in member " +
                         std::to_string(m + 1));
      }
      const auto it = position.find(id);
      if (it == position.end()) {
        missing += missing.empty() ? "" : ", ";
        missing += id;
        continue;
      }
      ones[it->second] += pred;
    }
    if (!missing.empty()) {
      throw ParseError("ensemble: member " + std::to_string(m + 1) +
                       " has ids absent from member 1: " + missing);
    }
    if (member.size() != first.size()) {
      std::string absent;
      for (const auto& [id, pos] : position) {
        if (!seen.count(id)) {
          absent += absent.empty() ? "" : ", ";
          absent += id;
        }
      }
      throw ParseError("ensemble: member " + std::to_string(m + 1) +
                       " is missing ids: " + absent);
    }
  }
  std::vector<std::pair<std::string, int>> merged;
  merged.reserve(first.size());
  const int majority = static_cast<int>(members.size() / 2) + 1;
  for (std::size_t i = 0; i < first.size(); ++i) {
    merged.emplace_back(first[i].first, ones[i] >= majority ? 1 : 0);
  }
  return merged;
}

void ensemble(const std::vector<std::string>& prediction_files,
              const std::string& out_path) {
  std::vector<std::vector<std::pair<std::string, int>>> members;
  members.reserve(prediction_files.size());
  for (const std::string& path : prediction_files) {
    members.push_back(read_prediction_labels(path));
  }
  const auto merged = majority_vote(members);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) {
    throw ParseError("ensemble " + out_path + ": cannot open for writing");
  }
  for (const auto& [id, pred] : merged) {
    json j;
    j["id"] = id;
    j["predicted"] = pred;
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw ParseError("ensemble " + out_path + ": write failed");
}

AnalyzeReport analyze(const std::vector<Instance>& instances) {
  AnalyzeReport report;
  for (const Instance& inst : instances) {
    report.counts[static_cast<int>(classify_question(inst.question.tokens))]++;
    report.total++;
  }
  return report;
}

}  // namespace hma
