#include "hma/embedding.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hma {

std::size_t char_inventory_size() { return 2 + 26 + 10 + 1; }

std::vector<std::size_t> char_ids(const std::string& token) {
  std::vector<std::size_t> ids;
  ids.reserve(token.size());
  for (char c : token) {
    if (c >= 'a' && c <= 'z') {
      ids.push_back(2 + static_cast<std::size_t>(c - 'a'));
    } else if (c >= '0' && c <= '9') {
      ids.push_back(2 + 26 + static_cast<std::size_t>(c - '0'));
    } else if (c == '\'') {
      ids.push_back(2 + 26 + 10);
    } else {
      ids.push_back(1);  // unk
    }
  }
  return ids;
}

Tensor load_word_vectors(const std::string& path, const Vocab& vocab,
                         std::size_t word_dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw ParseError("vectors " + path + ": cannot open");

  Tensor table = Tensor::zeros({vocab.size(), word_dim});
  auto values = table.mutable_values();
  std::vector<bool> filled(vocab.size(), false);
  std::vector<double> unk_row;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    if (fields.size() != word_dim) {
      throw ParseError("vectors " + path + ":" + std::to_string(line_no) +
                       ": expected " + std::to_string(word_dim) +
                       " values after the token, got " +
                       std::to_string(fields.size()));
    }
    const std::size_t id = vocab.lookup(token);
    const bool is_unk_entry = token == "unk";
    if (id == Vocab::kUnk && !is_unk_entry) continue;
    std::vector<double> row(word_dim);
    for (std::size_t j = 0; j < word_dim; ++j) {
      char* end = nullptr;
      row[j] = std::strtod(fields[j].c_str(), &end);
      if (end == fields[j].c_str() || *end != '\0') {
        throw ParseError("vectors " + path + ":" + std::to_string(line_no) +
                         ": bad float \"" + fields[j] + "\"");
      }
    }
    if (is_unk_entry && unk_row.empty()) unk_row = row;
    if (id != Vocab::kUnk && !filled[id]) {
      std::copy(row.begin(), row.end(), &values[id * word_dim]);
      filled[id] = true;
    }
  }

  if (unk_row.empty()) {
    unk_row.resize(word_dim);
    for (double& v : unk_row) v = rng.normal(0.0, 0.1);
  }
  std::copy(unk_row.begin(), unk_row.end(), &values[Vocab::kUnk * word_dim]);
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    if (!filled[id]) {
      std::copy(unk_row.begin(), unk_row.end(), &values[id * word_dim]);
    }
  }
  return table;
}

Tensor embed_token(std::size_t word_id, std::span<const std::size_t> chars,
                   std::size_t pos_id, double match_bit, double fuzzy_bit,
                   const EmbeddingTables& tables) {
  const std::size_t word_ids[] = {word_id};
  const std::size_t pos_ids[] = {pos_id};
  Tensor word = embedding_rows(tables.word_table, word_ids);
  Tensor char_rows = embedding_rows(tables.char_table, chars);
  Tensor conv = conv1d_maxpool(char_rows, tables.char_filters,
                               tables.char_bias, chars.size());
  Tensor tag = embedding_rows(tables.pos_table, pos_ids);
  Tensor bits = Tensor::from_values({1, 2}, {match_bit, fuzzy_bit});
  return concat_last({word, conv, tag, bits});
}

namespace {

Tensor embed_sequence(const SeqFeatures& seq, std::size_t max_len,
                      const EmbeddingTables& tables, const Vocab& vocab,
                      std::size_t embed_dim) {
  if (seq.pos.size() != seq.tokens.size() ||
      seq.match_feat.size() != seq.tokens.size() ||
      seq.fuzzy_feat.size() != seq.tokens.size()) {
    throw ContractError("embed_instance: feature lists not aligned with "
                        "tokens");
  }
  const std::size_t n = std::min(seq.size(), max_len);
  if (n == 0) return Tensor::zeros({max_len, embed_dim});
  std::vector<Tensor> rows;
  rows.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto chars = char_ids(seq.tokens[i]);
    rows.push_back(embed_token(vocab.lookup(seq.tokens[i]), chars,
                               static_cast<std::size_t>(seq.pos[i]),
                               seq.match_feat[i], seq.fuzzy_feat[i], tables));
  }
  if (n < max_len) {
    rows.push_back(Tensor::zeros({max_len - n, embed_dim}));
  }
  return concat_rows(rows);
}

}  // namespace

EmbeddedBatch embed_instance(const Instance& inst,
                             const EmbeddingTables& tables,
                             const Vocab& vocab, const Config& cfg) {
  const std::size_t e = cfg.embed_dim();
  EmbeddedBatch batch;
  batch.text = embed_sequence(inst.text, cfg.text_max, tables, vocab, e);
  batch.question = embed_sequence(inst.question, cfg.question_max, tables,
                                  vocab, e);
  batch.text_len = std::min(inst.text.size(), cfg.text_max);
  batch.question_len = std::min(inst.question.size(), cfg.question_max);
  for (std::size_t k = 0; k < 2; ++k) {
    batch.choices[k] = embed_sequence(inst.choices[k], cfg.choice_max, tables,
                                      vocab, e);
    batch.choice_len[k] = std::min(inst.choices[k].size(), cfg.choice_max);
  }
  return batch;
}

}  // namespace hma
