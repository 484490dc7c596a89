#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hma/checkpoint.hpp"
#include "hma/harness.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

using namespace hma;
using namespace hma::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Scratch directory fresh per test case.
struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::path("hw_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const {
    return (dir / leaf).string();
  }
};

Config synthetic_config(const Workspace& ws, std::uint64_t seed = 1,
                        std::size_t epochs = 8) {
  Config cfg;
  cfg.text_max = 16;
  cfg.question_max = 8;
  cfg.choice_max = 3;
  cfg.word_dim = 8;
  cfg.char_dim = 4;
  cfg.char_conv_dim = 12;
  cfg.pos_dim = 4;
  cfg.hidden = 12;  // e = 8 + 12 + 4 + 2 = 26
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.train_path = ws / "train.jsonl";
  cfg.dev_path = ws / "train.jsonl";
  cfg.vectors_path = ws / "vectors.txt";
  cfg.checkpoint_path = ws / "model.ckpt";
  cfg.trace_path = ws / "trace.csv";
  write_synthetic_corpus_file(cfg.train_path);
  write_synthetic_vectors_file(cfg.vectors_path, cfg.word_dim);
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// question types / analyze
// ---------------------------------------------------------------------------

TEST_CASE("question classification by the leading token") {
  CHECK(classify_question({"did", "he", "wash", "the", "car"}) ==
        QuestionType::YesNo);
  CHECK(classify_question({"what", "did", "he", "do", "next"}) ==
        QuestionType::What);
  CHECK(classify_question({"who", "came"}) == QuestionType::Who);
  CHECK(classify_question({"why"}) == QuestionType::Why);
  CHECK(classify_question({"how", "many"}) == QuestionType::How);
  CHECK(classify_question({"where", "is", "it"}) == QuestionType::Where);
  CHECK(classify_question({"when", "was", "it"}) == QuestionType::When);
  CHECK(classify_question({"which", "one"}) == QuestionType::Which);
  CHECK(classify_question({"were", "they", "home"}) == QuestionType::YesNo);
  CHECK(classify_question({"name", "the", "place"}) == QuestionType::Other);
  CHECK(classify_question({}) == QuestionType::Other);
}

TEST_CASE("analyze proportions partition the corpus") {
  std::vector<Instance> instances;
  instances.push_back(make_instance("a", "t", "what happened", "x", "y"));
  instances.push_back(make_instance("b", "t", "did it rain", "x", "y"));
  instances.push_back(make_instance("c", "t", "where was she", "x", "y"));
  instances.push_back(make_instance("d", "t", "hmm strange", "x", "y"));
  const AnalyzeReport report = analyze(instances);
  CHECK(report.total == 4);
  CHECK(report.counts[static_cast<int>(QuestionType::What)] == 1);
  CHECK(report.counts[static_cast<int>(QuestionType::YesNo)] == 1);
  CHECK(report.counts[static_cast<int>(QuestionType::Other)] == 1);
  double sum = 0.0;
  for (int t = 0; t < kQuestionTypeCount; ++t) {
    sum += report.proportion(static_cast<QuestionType>(t));
  }
  CHECK(std::fabs(sum - 1.0) < 1e-9);
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

TEST_CASE("the synthetic corpus trains to falling loss and high accuracy") {
  Workspace ws("train_basic");
  const Config cfg = synthetic_config(ws, 1, 8);
  const TrainResult result = train(cfg);
  REQUIRE(result.epoch_loss.size() == 8);
  // learning signal: loss after epoch 5 is strictly below its initial value
  CHECK(result.epoch_loss[4] < result.epoch_loss[0]);
  CHECK(result.epoch_loss[7] < result.epoch_loss[0]);
  CHECK(result.best_dev_accuracy == 1.0);
  CHECK(fs::exists(cfg.checkpoint_path));
  CHECK(fs::exists(cfg.checkpoint_path + ".vocab"));
  const std::string trace = slurp(cfg.trace_path);
  CHECK(trace.rfind("epoch,train_loss,dev_acc\n", 0) == 0);
  // one row per epoch plus the header
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 9);
}

TEST_CASE("a zero-epoch run saves the initialization and evaluates dev once") {
  Workspace ws("train_zero");
  Config cfg = synthetic_config(ws, 5, 0);
  const TrainResult result = train(cfg);
  CHECK(result.best_epoch == 0);
  CHECK(result.epoch_loss.empty());
  CHECK(slurp(cfg.trace_path) == "epoch,train_loss,dev_acc\n");

  // the saved checkpoint is exactly the deterministic initialization
  Vocab vocab;
  auto train_set = load_corpus(cfg.train_path, VocabMode::Build, vocab,
                               cfg.limits());
  (void)train_set;
  Rng rng(cfg.seed);
  HmaModel fresh(cfg, load_word_vectors(cfg.vectors_path, vocab, cfg.word_dim,
                                        rng));
  HmaModel loaded(cfg, Tensor::zeros({vocab.size(), cfg.word_dim}));
  load_checkpoint(cfg.checkpoint_path, loaded.params());
  REQUIRE(fresh.params().size() == loaded.params().size());
  for (std::size_t i = 0; i < fresh.params().size(); ++i) {
    CHECK(bitwise_equal(fresh.params().entries()[i].tensor,
                        loaded.params().entries()[i].tensor));
  }
}

TEST_CASE("identical seeds give byte-identical traces and predictions") {
  Workspace ws("train_det");
  Config cfg_a = synthetic_config(ws, 3, 3);
  cfg_a.checkpoint_path = ws / "a.ckpt";
  cfg_a.trace_path = ws / "a.csv";
  Config cfg_b = cfg_a;
  cfg_b.checkpoint_path = ws / "b.ckpt";
  cfg_b.trace_path = ws / "b.csv";
  (void)train(cfg_a);
  (void)train(cfg_b);
  CHECK(slurp(cfg_a.trace_path) == slurp(cfg_b.trace_path));
  CHECK(slurp(cfg_a.checkpoint_path) == slurp(cfg_b.checkpoint_path));

  (void)evaluate(cfg_a.checkpoint_path, cfg_a.train_path, ws / "a.jsonl",
                 cfg_a);
  (void)evaluate(cfg_b.checkpoint_path, cfg_b.train_path, ws / "b.jsonl",
                 cfg_b);
  CHECK(slurp(ws / "a.jsonl") == slurp(ws / "b.jsonl"));
}

TEST_CASE("training fails up front on broken inputs") {
  Workspace ws("train_errors");
  Config cfg = synthetic_config(ws, 1, 1);

  Config no_train = cfg;
  no_train.train_path = "";
  CHECK(throws_with<ContractError>([&] { (void)train(no_train); },
                                   "train path"));

  Config missing_file = cfg;
  missing_file.train_path = ws / "absent.jsonl";
  CHECK_THROWS_AS((void)train(missing_file), ParseError);

  // vector width mismatch: vectors written for word_dim 8, config wants 6
  Config bad_width = cfg;
  bad_width.word_dim = 6;
  bad_width.char_conv_dim = 14;  // keep e = 26
  CHECK(throws_with<ParseError>([&] { (void)train(bad_width); },
                                "expected 6 values"));

  // unlabeled instance
  Config unlabeled = cfg;
  unlabeled.train_path = ws / "unlabeled.jsonl";
  unlabeled.dev_path = unlabeled.train_path;
  {
    std::ofstream out(unlabeled.train_path);
    out << R"({"id": "u1", "text": "a b", "question": "what", )"
        << R"("choices": ["a", "b"]})" << "\n";
  }
  CHECK(throws_with<ContractError>([&] { (void)train(unlabeled); },
                                   "unlabeled instance u1"));
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

TEST_CASE("an overfit model evaluates at accuracy 1.0, recounted from the file") {
  Workspace ws("eval_acc");
  Config cfg = synthetic_config(ws, 2, 6);
  (void)train(cfg);
  const std::string out_path = ws / "preds.jsonl";
  const EvalReport report = evaluate(cfg.checkpoint_path, cfg.train_path,
                                     out_path, cfg);
  REQUIRE(report.accuracy.has_value());
  CHECK(*report.accuracy == 1.0);
  CHECK(report.total == 32);
  CHECK(report.labeled == 32);

  // independent recount: prediction file vs corpus gold labels
  const auto preds = read_prediction_labels(out_path);
  REQUIRE(preds.size() == 32);
  Vocab vocab;
  const auto gold = load_corpus(cfg.train_path, VocabMode::Frozen, vocab,
                                cfg.limits());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    REQUIRE(preds[i].first == gold[i].id);
    if (preds[i].second == *gold[i].label) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(gold.size()) ==
        *report.accuracy);

  // per-type counts partition the corpus
  std::size_t type_total = 0;
  for (auto c : report.type_counts) type_total += c;
  CHECK(type_total == report.total);
}

TEST_CASE("an unlabeled corpus gets predictions but no accuracy") {
  Workspace ws("eval_unlabeled");
  Config cfg = synthetic_config(ws, 2, 1);
  (void)train(cfg);
  const std::string unlabeled = ws / "unlabeled.jsonl";
  {
    std::ofstream out(unlabeled);
    out << R"({"id": "u1", "text": "the man washed the fence", )"
        << R"("question": "what did the man wash", )"
        << R"("choices": ["fence", "door"]})" << "\n";
  }
  const std::string out_path = ws / "preds.jsonl";
  const EvalReport report = evaluate(cfg.checkpoint_path, unlabeled, out_path,
                                     cfg);
  CHECK_FALSE(report.accuracy.has_value());
  CHECK(report.total == 1);
  const auto preds = read_prediction_labels(out_path);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].first == "u1");
}

TEST_CASE("evaluate is pure: repeated runs produce identical bytes") {
  Workspace ws("eval_pure");
  Config cfg = synthetic_config(ws, 4, 2);
  (void)train(cfg);
  (void)evaluate(cfg.checkpoint_path, cfg.train_path, ws / "p1.jsonl", cfg);
  (void)evaluate(cfg.checkpoint_path, cfg.train_path, ws / "p2.jsonl", cfg);
  CHECK(slurp(ws / "p1.jsonl") == slurp(ws / "p2.jsonl"));
}

TEST_CASE("checkpoint save/load round-trip preserves evaluation bitwise") {
  Workspace ws("eval_roundtrip");
  Config cfg = synthetic_config(ws, 6, 3);
  (void)train(cfg);

  // loaded model
  (void)evaluate(cfg.checkpoint_path, cfg.train_path, ws / "before.jsonl",
                 cfg);
  // save the loaded model again and evaluate the copy
  {
    Vocab vocab = Vocab::load(cfg.checkpoint_path + ".vocab");
    HmaModel model(cfg, Tensor::zeros({vocab.size(), cfg.word_dim}));
    load_checkpoint(cfg.checkpoint_path, model.params());
    save_checkpoint(ws / "copy.ckpt", model.params());
    vocab.save(ws / "copy.ckpt.vocab");
  }
  (void)evaluate(ws / "copy.ckpt", cfg.train_path, ws / "after.jsonl", cfg);
  CHECK(slurp(ws / "before.jsonl") == slurp(ws / "after.jsonl"));
  CHECK(slurp(cfg.checkpoint_path) == slurp(ws / "copy.ckpt"));
}

TEST_CASE("a checkpoint from one geometry refuses another") {
  Workspace ws("eval_mismatch");
  Config cfg = synthetic_config(ws, 1, 0);
  (void)train(cfg);
  Config other = cfg;
  other.hidden = 16;
  CHECK(throws_with<ParseError>(
      [&] {
        (void)evaluate(cfg.checkpoint_path, cfg.train_path,
                       ws / "preds.jsonl", other);
      },
      "shape mismatch"));
}

TEST_CASE("attention dumps land one CSV set per instance") {
  Workspace ws("eval_dump");
  Config cfg = synthetic_config(ws, 1, 0);
  (void)train(cfg);
  const std::string dump_dir = ws / "attn";
  (void)evaluate(cfg.checkpoint_path, cfg.train_path, ws / "preds.jsonl", cfg,
                 dump_dir);
  CHECK(fs::exists(dump_dir + "/syn0.choice0_text_attn.csv"));
  CHECK(fs::exists(dump_dir + "/syn0.choice1_text_attn.csv"));
  CHECK(fs::exists(dump_dir + "/syn0.question_self_attn.csv"));
  // the choice-over-text matrix has choice_max rows
  std::ifstream in(dump_dir + "/syn0.choice0_text_attn.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == cfg.choice_max);
}

TEST_CASE("degenerate instances stay finite through the full model") {
  Config cfg;
  cfg.text_max = 16;
  cfg.question_max = 8;
  cfg.choice_max = 3;
  cfg.word_dim = 8;
  cfg.char_dim = 4;
  cfg.char_conv_dim = 12;
  cfg.pos_dim = 4;
  cfg.hidden = 12;
  const Instance no_question =
      make_instance("d1", "the man slept", "", "bed", "chair", 0);
  const Instance no_choice =
      make_instance("d2", "the man slept", "where did he sleep", "", "bed", 1);
  Vocab vocab = vocab_of({no_question, no_choice});
  HmaModel model(cfg, random_word_table(vocab, cfg.word_dim, 44));
  for (const Instance* inst : {&no_question, &no_choice}) {
    const ForwardResult fr = model.forward(*inst, vocab);
    CHECK(std::isfinite(fr.combined.at(0, 0)));
    CHECK(std::isfinite(fr.combined.at(0, 1)));
    CHECK(std::fabs(fr.combined.at(0, 0) + fr.combined.at(0, 1) - 2.0) <
          1e-9);
    CHECK(std::isfinite(model.loss(fr, *inst->label).item()));
  }
  // with no question at all, neither aspect can score either choice
  const ForwardResult fr = model.forward(no_question, vocab);
  CHECK(fr.combined.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fr.predicted == 0);
}

// ---------------------------------------------------------------------------
// ensembling
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::pair<std::string, int>>> vote_members(
    const std::vector<int>& votes) {
  std::vector<std::vector<std::pair<std::string, int>>> members;
  for (int v : votes) members.push_back({{"only", v}});
  return members;
}

}  // namespace

TEST_CASE("majority voting follows the count") {
  CHECK(majority_vote(vote_members({0, 0, 0, 1, 1, 0, 1}))[0].second == 0);
  CHECK(majority_vote(vote_members({1, 1, 1, 1, 1, 1, 1}))[0].second == 1);
  CHECK(majority_vote(vote_members({1, 0, 1}))[0].second == 1);
}

TEST_CASE("majority voting matches a brute-force counter on random sets") {
  Rng rng(10);
  for (int it = 0; it < 50; ++it) {
    const std::size_t n_members = 1 + 2 * rng.index_below(5);  // odd ≤ 9
    const std::size_t n_ids = 1 + rng.index_below(6);
    std::vector<std::vector<std::pair<std::string, int>>> members(n_members);
    for (auto& m : members) {
      for (std::size_t i = 0; i < n_ids; ++i) {
        m.emplace_back("id" + std::to_string(i),
                       static_cast<int>(rng.index_below(2)));
      }
    }
    const auto merged = majority_vote(members);
    REQUIRE(merged.size() == n_ids);
    for (std::size_t i = 0; i < n_ids; ++i) {
      int ones = 0;
      for (const auto& m : members) ones += m[i].second;
      const int want = 2 * ones > static_cast<int>(n_members) ? 1 : 0;
      CHECK(merged[i].second == want);
    }
  }
}

TEST_CASE("even member counts and id mismatches are rejected") {
  CHECK(throws_with<ContractError>(
      [] { (void)majority_vote(vote_members({0, 1})); }, "odd"));
  std::vector<std::vector<std::pair<std::string, int>>> members = {
      {{"a", 0}, {"b", 1}},
      {{"a", 1}, {"b", 0}},
      {{"a", 1}, {"c", 1}},
  };
  CHECK(throws_with<ParseError>([&] { (void)majority_vote(members); }, "c"));
  CHECK(throws_with<ParseError>([&] { (void)majority_vote(members); }, "b"));
}

TEST_CASE("an ensemble of seven copies reproduces the member exactly") {
  Workspace ws("ens_copies");
  Config cfg = synthetic_config(ws, 8, 2);
  (void)train(cfg);
  const std::string member = ws / "member.jsonl";
  (void)evaluate(cfg.checkpoint_path, cfg.train_path, member, cfg);
  std::vector<std::string> files(7, member);
  const std::string merged_path = ws / "merged.jsonl";
  ensemble(files, merged_path);
  const auto base = read_prediction_labels(member);
  const auto combined = read_prediction_labels(merged_path);
  REQUIRE(base.size() == combined.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(base[i].first == combined[i].first);
    CHECK(base[i].second == combined[i].second);
  }
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HMA_CLI_PATH) + " " + args +
                          " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("the CLI surfaces train, eval, ensemble and analyze") {
  Workspace ws("cli");
  Config cfg = synthetic_config(ws, 9, 1);
  // write the config file the CLI will read
  const std::string cfg_path = ws / "run.cfg";
  {
    std::ofstream out(cfg_path);
    out << "# synthetic smoke run\n"
        << "text_max=" << cfg.text_max << "\n"
        << "question_max=" << cfg.question_max << "\n"
        << "choice_max=" << cfg.choice_max << "\n"
        << "word_dim=" << cfg.word_dim << "\n"
        << "char_dim=" << cfg.char_dim << "\n"
        << "char_conv_dim=" << cfg.char_conv_dim << "\n"
        << "pos_dim=" << cfg.pos_dim << "\n"
        << "hidden=" << cfg.hidden << "\n"
        << "embed=26\n"
        << "seed=9\nepochs=1\nlr=0.001\n"
        << "train=" << cfg.train_path << "\n"
        << "dev=" << cfg.dev_path << "\n"
        << "vectors=" << cfg.vectors_path << "\n"
        << "checkpoint=" << cfg.checkpoint_path << "\n"
        << "trace=" << cfg.trace_path << "\n";
  }
  CHECK(run_cli("train --config " + cfg_path) == 0);
  CHECK(fs::exists(cfg.checkpoint_path));
  CHECK(run_cli("eval --checkpoint " + cfg.checkpoint_path + " --data " +
                cfg.train_path + " --out " + (ws / "p.jsonl") + " --config " +
                cfg_path) == 0);
  CHECK(fs::exists(ws / "p.jsonl"));
  std::string members;
  for (int i = 0; i < 7; ++i) members += " " + (ws / "p.jsonl");
  CHECK(run_cli("ensemble --out " + (ws / "m.jsonl") + members) == 0);
  CHECK(run_cli("analyze --data " + cfg.train_path) == 0);
  // failures exit nonzero
  CHECK(run_cli("train --config " + (ws / "absent.cfg")) != 0);
  CHECK(run_cli("ensemble --out " + (ws / "x.jsonl") + " " + (ws / "p.jsonl") +
                " " + (ws / "p.jsonl")) != 0);  // even count
}
