#include "hma/config.hpp"

#include <cstdlib>
#include <fstream>

namespace hma {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ParseError(where + ": expected an integer, got \"" + v + "\"");
  }
  return static_cast<std::size_t>(n);
}

double parse_double(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ParseError(where + ": expected a number, got \"" + v + "\"");
  }
  return d;
}

}  // namespace

void Config::validate() const {
  if (num_choices != 2) {
    throw ContractError("config: choices must be 2, got " +
                        std::to_string(num_choices));
  }
  if (text_max == 0 || question_max == 0 || choice_max == 0) {
    throw ContractError("config: sequence maxima must be positive");
  }
  if (word_dim == 0 || char_dim == 0 || char_conv_dim == 0 || pos_dim == 0) {
    throw ContractError("config: embedding dims must be positive");
  }
  if (hidden == 0 || hidden % 2 != 0) {
    throw ContractError("config: hidden must be a positive even number, got " +
                        std::to_string(hidden));
  }
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config " + path + ": cannot open");
  Config cfg;
  bool embed_pinned = false;
  std::size_t embed_value = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(where + ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "text_max") cfg.text_max = parse_size(value, where);
    else if (key == "question_max") cfg.question_max = parse_size(value, where);
    else if (key == "choice_max") cfg.choice_max = parse_size(value, where);
    else if (key == "choices") cfg.num_choices = parse_size(value, where);
    else if (key == "word_dim") cfg.word_dim = parse_size(value, where);
    else if (key == "char_dim") cfg.char_dim = parse_size(value, where);
    else if (key == "char_conv_dim") cfg.char_conv_dim = parse_size(value, where);
    else if (key == "pos_dim") cfg.pos_dim = parse_size(value, where);
    else if (key == "hidden") cfg.hidden = parse_size(value, where);
    else if (key == "embed") { embed_pinned = true; embed_value = parse_size(value, where); }
    else if (key == "seed") cfg.seed = parse_size(value, where);
    else if (key == "epochs") cfg.epochs = parse_size(value, where);
    else if (key == "lr") cfg.learning_rate = parse_double(value, where);
    else if (key == "beta1") cfg.beta1 = parse_double(value, where);
    else if (key == "beta2") cfg.beta2 = parse_double(value, where);
    else if (key == "eps") cfg.epsilon = parse_double(value, where);
    else if (key == "train") cfg.train_path = value;
    else if (key == "dev") cfg.dev_path = value;
    else if (key == "vectors") cfg.vectors_path = value;
    else if (key == "checkpoint") cfg.checkpoint_path = value;
    else if (key == "trace") cfg.trace_path = value;
    else throw ParseError(where + ": unknown key \"" + key + "\"");
  }
  if (embed_pinned && embed_value != cfg.embed_dim()) {
    throw ParseError("config " + path + ": embed=" +
                     std::to_string(embed_value) +
                     " does not match word_dim+char_conv_dim+pos_dim+2=" +
                     std::to_string(cfg.embed_dim()));
  }
  cfg.validate();
  return cfg;
}

}  // namespace hma
