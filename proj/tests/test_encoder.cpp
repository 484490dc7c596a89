#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hma/encoder.hpp"
#include "hma/model.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

using namespace hma;
using namespace hma::testing;

// ---------------------------------------------------------------------------
// highway
// ---------------------------------------------------------------------------

TEST_CASE("a saturated-closed gate reduces the highway to tanh(E)") {
  Rng rng(1);
  HighwayParams p = random_highway(5, rng);
  p.b_gate = Tensor::full({1, 5}, -50.0);  // gate → 0: carry only
  const Tensor e = random_tensor({3, 5}, rng);
  const Tensor out = highway(e, p);
  for (std::size_t i = 0; i < e.numel(); ++i) {
    CHECK(out.values()[i] ==
          doctest::Approx(std::tanh(e.values()[i])).epsilon(1e-12));
  }
}

TEST_CASE("a saturated-open gate reduces the highway to the transform") {
  Rng rng(2);
  HighwayParams p = random_highway(4, rng);
  p.b_gate = Tensor::full({1, 4}, 50.0);  // gate → 1: transform only
  const Tensor e = random_tensor({2, 4}, rng);
  const Tensor out = highway(e, p);
  const Tensor want = tanh(add_rowvec(matmul(e, p.w_transform),
                                      p.b_transform));
  for (std::size_t i = 0; i < out.numel(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("highway gradients of all four parameter arrays match finite differences") {
  Rng rng(3);
  HighwayParams p = random_highway(4, rng);
  Tensor e = random_tensor({3, 4}, rng);
  Tensor leaves[] = {p.w_transform, p.b_transform, p.w_gate, p.b_gate, e};
  const double err =
      max_grad_rel_err(leaves, [&] { return sum_all(highway(e, p)); });
  CHECK(err < 1e-4);
}

// ---------------------------------------------------------------------------
// bilstm
// ---------------------------------------------------------------------------

TEST_CASE("bilstm with valid length 0 is all zero") {
  Rng rng(4);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  const Tensor out = bilstm(random_tensor({4, 3}, rng), w, 0);
  CHECK(out.shape() == Shape{4, 4});
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("bilstm rejects valid lengths beyond the row count") {
  Rng rng(5);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  CHECK_THROWS_AS((void)bilstm(Tensor::zeros({4, 3}), w, 5), RangeError);
}

TEST_CASE("palindromic input with tied directions mirrors the halves") {
  Rng rng(6);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  w.bwd = w.fwd;  // tie the directions
  const Tensor half = random_tensor({2, 3}, rng);
  // rows: a b b a
  const Tensor seq = concat_rows(
      {slice_rows(half, 0, 1), slice_rows(half, 1, 2), slice_rows(half, 1, 2),
       slice_rows(half, 0, 1)});
  const Tensor out = bilstm(seq, w, 4);
  const std::size_t h = 2;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      CHECK(out.at(i, j) == out.at(3 - i, h + j));
    }
  }
}

TEST_CASE("bilstm matches a step-by-step unrolled cell trace") {
  Rng rng(7);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  const Tensor seq = random_tensor({3, 3}, rng);
  const Tensor out = bilstm(seq, w, 3);

  Tensor h = Tensor::zeros({1, 2}), c = Tensor::zeros({1, 2});
  std::vector<Tensor> fwd;
  for (std::size_t t = 0; t < 3; ++t) {
    std::tie(h, c) = lstm_cell(slice_rows(seq, t, t + 1), h, c, w.fwd);
    fwd.push_back(h);
  }
  h = Tensor::zeros({1, 2});
  c = Tensor::zeros({1, 2});
  std::vector<Tensor> bwd(3);
  for (std::size_t t = 3; t-- > 0;) {
    std::tie(h, c) = lstm_cell(slice_rows(seq, t, t + 1), h, c, w.bwd);
    bwd[t] = h;
  }
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(out.at(t, j) == fwd[t].at(0, j));
      CHECK(out.at(t, 2 + j) == bwd[t].at(0, j));
    }
  }
}

TEST_CASE("extending padding leaves the valid rows bitwise unchanged") {
  Rng rng(8);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  const Tensor body = random_tensor({3, 3}, rng);
  const Tensor short_seq = concat_rows({body, Tensor::zeros({1, 3})});
  const Tensor long_seq = concat_rows({body, Tensor::full({5, 3}, 123.0)});
  const Tensor a = bilstm(short_seq, w, 3);
  const Tensor b = bilstm(long_seq, w, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(a.at(i, j) == b.at(i, j));
  }
  for (std::size_t i = 3; i < 8; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(b.at(i, j) == 0.0);
  }
}

TEST_CASE("highway plus bilstm is differentiable end to end") {
  Rng rng(9);
  HighwayParams hw = random_highway(3, rng);
  BiLstmWeights w = random_bilstm(3, 2, rng);
  Tensor seq = random_tensor({4, 3}, rng);
  Tensor leaves[] = {hw.w_transform, hw.b_transform, hw.w_gate, hw.b_gate,
                     w.fwd.w_input,  w.fwd.u_forget, w.fwd.b_cell,
                     w.bwd.w_output, w.bwd.u_input,  w.bwd.b_forget,
                     seq};
  const double err = max_grad_rel_err(leaves, [&] {
    return sum_all(tanh(bilstm(highway(seq, hw), w, 3)));
  });
  CHECK(err < 1e-4);
}

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

namespace {

struct EncoderFixture {
  Config cfg;
  Instance inst;
  Vocab vocab;
  EmbeddingTables tables;
  HighwayParams hw;
  BiLstmWeights text_lstm, question_lstm, choice_lstm;

  explicit EncoderFixture(Config config, std::uint64_t seed = 20)
      : cfg(std::move(config)),
        inst(make_instance("e1", "the girl painted the fence near the wall",
                           "what did the girl paint", "the fence",
                           "a ladder")) {
    vocab = vocab_of({inst});
    Rng rng(seed);
    tables.word_table = random_tensor({vocab.size(), cfg.word_dim}, rng, 0.5);
    tables.char_table =
        random_tensor({char_inventory_size(), cfg.char_dim}, rng, 0.05);
    tables.char_filters = random_tensor(
        {Config::kCharFilterWidth, cfg.char_dim, cfg.char_conv_dim}, rng,
        0.05);
    tables.char_bias = random_tensor({cfg.char_conv_dim}, rng, 0.05);
    tables.pos_table = random_tensor(
        {static_cast<std::size_t>(kPosTagCount), cfg.pos_dim}, rng, 0.05);
    const std::size_t e = cfg.embed_dim();
    hw = random_highway(e, rng);
    text_lstm = random_bilstm(e, cfg.hidden / 2, rng);
    question_lstm = random_bilstm(e, cfg.hidden / 2, rng);
    choice_lstm = random_bilstm(e, cfg.hidden / 2, rng);
  }

  ContextualReprs run(const Instance& which) const {
    const EmbeddedBatch batch = embed_instance(which, tables, vocab, cfg);
    return encode(batch, hw, text_lstm, question_lstm, choice_lstm);
  }
};

}  // namespace

TEST_CASE("encode produces the default-geometry shapes") {
  EncoderFixture fx{Config{}};  // default geometry
  const ContextualReprs ctx = fx.run(fx.inst);
  CHECK(ctx.text.shape() == Shape{300, 200});
  CHECK(ctx.question.shape() == Shape{20, 200});
  CHECK(ctx.choices[0].shape() == Shape{10, 200});
  CHECK(ctx.choices[1].shape() == Shape{10, 200});
}

TEST_CASE("swapping the choices permutes only the choice representations") {
  EncoderFixture fx{tiny_config()};
  Instance swapped = fx.inst;
  std::swap(swapped.choices[0], swapped.choices[1]);
  const ContextualReprs a = fx.run(fx.inst);
  const ContextualReprs b = fx.run(swapped);
  CHECK(bitwise_equal(a.text, b.text));
  CHECK(bitwise_equal(a.question, b.question));
  CHECK(bitwise_equal(a.choices[0], b.choices[1]));
  CHECK(bitwise_equal(a.choices[1], b.choices[0]));
}

TEST_CASE("the model registers three distinct LSTM weight sets") {
  const Config cfg = tiny_config();
  Vocab vocab;
  vocab.add("word");
  HmaModel model(cfg, Tensor::zeros({vocab.size(), cfg.word_dim}));
  const ModelParams& p = model.params();
  CHECK(p.contains("lstm_text.fwd.w_input"));
  CHECK(p.contains("lstm_q.fwd.w_input"));
  CHECK(p.contains("lstm_c.fwd.w_input"));
  CHECK(p.contains("hw.w_gate"));
  const Tensor& a = p.get("lstm_text.fwd.w_input");
  const Tensor& b = p.get("lstm_q.fwd.w_input");
  const Tensor& c = p.get("lstm_c.fwd.w_input");
  CHECK_FALSE(a.same_storage(b));
  CHECK_FALSE(bitwise_equal(a, b));
  CHECK_FALSE(bitwise_equal(b, c));
}
