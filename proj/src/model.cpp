#include "hma/model.hpp"

#include <cmath>

#include "hma/rng.hpp"

namespace hma {

namespace {

Tensor uniform_init(Shape shape, double half_width, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_values()) {
    v = rng.uniform(-half_width, half_width);
  }
  return t;
}

Tensor uniform_init_zero_row0(Shape shape, double half_width, Rng& rng) {
  Tensor t = uniform_init(std::move(shape), half_width, rng);
  const std::size_t row = t.numel() / t.shape()[0];
  auto v = t.mutable_values();
  for (std::size_t j = 0; j < row; ++j) v[j] = 0.0;
  return t;
}

constexpr double kInitHalfWidth = 0.05;

}  // namespace

HmaModel::HmaModel(const Config& cfg, Tensor word_table) : cfg_(cfg) {
  cfg_.validate();
  if (word_table.rank() != 2 || word_table.cols() != cfg.word_dim) {
    throw DimensionError("model: word table must be |V|x" +
                         std::to_string(cfg.word_dim) + ", got " +
                         shape_str(word_table.shape()));
  }
  if (word_table.rows() < 2) {
    throw ContractError("model: word table needs pad and unk rows");
  }
  Rng rng(cfg.seed);
  const std::size_t e = cfg.embed_dim();
  const std::size_t hidden = cfg.hidden / 2;  // per direction

  emb_.word_table = params_.add("embedding.word_table", std::move(word_table),
                                /*trainable=*/false);
  emb_.char_table = params_.add(
      "embedding.char_table",
      uniform_init_zero_row0({char_inventory_size(), cfg.char_dim},
                             kInitHalfWidth, rng),
      true, /*frozen_pad_row=*/true);
  emb_.char_filters = params_.add(
      "embedding.char_filters",
      uniform_init({Config::kCharFilterWidth, cfg.char_dim, cfg.char_conv_dim},
                   kInitHalfWidth, rng));
  emb_.char_bias = params_.add("embedding.char_bias",
                               Tensor::zeros({cfg.char_conv_dim}));
  emb_.pos_table = params_.add(
      "embedding.pos_table",
      uniform_init_zero_row0({static_cast<std::size_t>(kPosTagCount),
                              cfg.pos_dim},
                             kInitHalfWidth, rng),
      true, /*frozen_pad_row=*/true);

  highway_.w_transform = params_.add("hw.w_transform",
                                     uniform_init({e, e}, kInitHalfWidth, rng));
  highway_.b_transform = params_.add("hw.b_transform", Tensor::zeros({1, e}));
  highway_.w_gate = params_.add("hw.w_gate",
                                uniform_init({e, e}, kInitHalfWidth, rng));
  highway_.b_gate = params_.add("hw.b_gate", Tensor::full({1, e}, -1.0));

  // Recurrent weights use a 1/sqrt(H) half-width; forget-gate bias starts
  // at 1 so early steps carry state.
  const double rec = 1.0 / std::sqrt(static_cast<double>(hidden));
  const auto add_cell = [&](const std::string& prefix, std::size_t in_dim) {
    LstmCellWeights w;
    w.w_input = params_.add(prefix + ".w_input",
                            uniform_init({in_dim, hidden}, kInitHalfWidth, rng));
    w.w_forget = params_.add(prefix + ".w_forget",
                             uniform_init({in_dim, hidden}, kInitHalfWidth, rng));
    w.w_cell = params_.add(prefix + ".w_cell",
                           uniform_init({in_dim, hidden}, kInitHalfWidth, rng));
    w.w_output = params_.add(prefix + ".w_output",
                             uniform_init({in_dim, hidden}, kInitHalfWidth, rng));
    w.u_input = params_.add(prefix + ".u_input",
                            uniform_init({hidden, hidden}, rec, rng));
    w.u_forget = params_.add(prefix + ".u_forget",
                             uniform_init({hidden, hidden}, rec, rng));
    w.u_cell = params_.add(prefix + ".u_cell",
                           uniform_init({hidden, hidden}, rec, rng));
    w.u_output = params_.add(prefix + ".u_output",
                             uniform_init({hidden, hidden}, rec, rng));
    w.b_input = params_.add(prefix + ".b_input", Tensor::zeros({1, hidden}));
    w.b_forget = params_.add(prefix + ".b_forget",
                             Tensor::full({1, hidden}, 1.0));
    w.b_cell = params_.add(prefix + ".b_cell", Tensor::zeros({1, hidden}));
    w.b_output = params_.add(prefix + ".b_output", Tensor::zeros({1, hidden}));
    return w;
  };
  text_lstm_ = {add_cell("lstm_text.fwd", e), add_cell("lstm_text.bwd", e)};
  question_lstm_ = {add_cell("lstm_q.fwd", e), add_cell("lstm_q.bwd", e)};
  choice_lstm_ = {add_cell("lstm_c.fwd", e), add_cell("lstm_c.bwd", e)};

  answer_.text_aspect_weight = params_.add(
      "answer.text_aspect_weight",
      Tensor::full({cfg.choice_max, cfg.question_max}, 1.0));
  answer_.question_aspect_weight = params_.add(
      "answer.question_aspect_weight",
      Tensor::full({cfg.choice_max, cfg.question_max}, 1.0));
}

namespace {

Tensor valid_grid_mask(std::size_t rows, std::size_t cols,
                       std::size_t valid_rows, std::size_t valid_cols) {
  std::vector<double> m(rows * cols, 0.0);
  for (std::size_t i = 0; i < valid_rows; ++i) {
    for (std::size_t j = 0; j < valid_cols; ++j) m[i * cols + j] = 1.0;
  }
  return Tensor::from_values({rows, cols}, std::move(m));
}

}  // namespace

ForwardResult HmaModel::forward(const Instance& inst,
                                const Vocab& vocab) const {
  const EmbeddedBatch batch = embed_instance(inst, emb_, vocab, cfg_);
  const ContextualReprs ctx = encode(batch, highway_, text_lstm_,
                                     question_lstm_, choice_lstm_);
  ForwardResult out;
  out.aspects = build_aspects(ctx);

  std::vector<Tensor> text_parts, question_parts;
  for (std::size_t k = 0; k < 2; ++k) {
    const Tensor mask = valid_grid_mask(cfg_.choice_max, cfg_.question_max,
                                        ctx.choice_len[k], ctx.question_len);
    text_parts.push_back(score_choice(
        deep_match(out.aspects.choice_text[k], out.aspects.question_self),
        answer_.text_aspect_weight, mask));
    question_parts.push_back(score_choice(
        deep_match(out.aspects.choice_question[k], out.aspects.question_self),
        answer_.question_aspect_weight, mask));
  }
  out.text_scores = concat_last({text_parts[0], text_parts[1]});
  out.question_scores = concat_last({question_parts[0], question_parts[1]});
  Combined combined = combine(out.text_scores, out.question_scores);
  out.combined = std::move(combined.scores);
  out.predicted = combined.predicted;
  return out;
}

Tensor HmaModel::loss(const ForwardResult& result, int label) const {
  return cross_entropy(result.combined, label);
}

}  // namespace hma
