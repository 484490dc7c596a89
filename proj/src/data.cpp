#include "hma/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace hma {

namespace {

using json = nlohmann::json;

bool is_kept(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

}  // namespace

std::vector<std::string> preprocess(const std::string& raw) {
  std::string lowered;
  lowered.reserve(raw.size());
  for (char c : raw) {
    lowered.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(c))));
  }
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    const char c = lowered[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (is_kept(c)) {
      current.push_back(c);
    } else if (c == '\'' && !current.empty() && is_kept(current.back()) &&
               i + 1 < lowered.size() && is_kept(lowered[i + 1])) {
      current.push_back(c);  // intra-word apostrophe only
    }
    // everything else is removed without splitting the token
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// --------------------------------------------------------------------------
// Part-of-speech rule tagger
// --------------------------------------------------------------------------

const char* pos_tag_name(PosTag t) {
  switch (t) {
    case PosTag::Pad: return "PAD";
    case PosTag::Noun: return "NOUN";
    case PosTag::Verb: return "VERB";
    case PosTag::Adj: return "ADJ";
    case PosTag::Adv: return "ADV";
    case PosTag::Pron: return "PRON";
    case PosTag::Det: return "DET";
    case PosTag::Adp: return "ADP";
    case PosTag::Num: return "NUM";
    case PosTag::Conj: return "CONJ";
    case PosTag::Prt: return "PRT";
    case PosTag::Aux: return "AUX";
    case PosTag::Propn: return "PROPN";
    case PosTag::Intj: return "INTJ";
    case PosTag::Sym: return "SYM";
    case PosTag::Punct: return "PUNCT";
    case PosTag::X: return "X";
  }
  return "X";
}

std::optional<PosTag> pos_tag_from_name(const std::string& name) {
  for (int i = 0; i < kPosTagCount; ++i) {
    const PosTag t = static_cast<PosTag>(i);
    if (name == pos_tag_name(t)) return t;
  }
  return std::nullopt;
}

std::string valid_pos_tags() {
  std::string s;
  for (int i = 0; i < kPosTagCount; ++i) {
    if (i) s += ", ";
    s += pos_tag_name(static_cast<PosTag>(i));
  }
  return s;
}

namespace {

const std::unordered_map<std::string, PosTag>& lexicon() {
  static const std::unordered_map<std::string, PosTag> table = {
      // determiners
      {"the", PosTag::Det}, {"a", PosTag::Det}, {"an", PosTag::Det},
      {"this", PosTag::Det}, {"that", PosTag::Det}, {"these", PosTag::Det},
      {"those", PosTag::Det}, {"each", PosTag::Det}, {"every", PosTag::Det},
      {"some", PosTag::Det}, {"any", PosTag::Det}, {"no", PosTag::Det},
      {"both", PosTag::Det}, {"another", PosTag::Det}, {"which", PosTag::Det},
      // pronouns
      {"i", PosTag::Pron}, {"you", PosTag::Pron}, {"he", PosTag::Pron},
      {"she", PosTag::Pron}, {"it", PosTag::Pron}, {"we", PosTag::Pron},
      {"they", PosTag::Pron}, {"me", PosTag::Pron}, {"him", PosTag::Pron},
      {"her", PosTag::Pron}, {"us", PosTag::Pron}, {"them", PosTag::Pron},
      {"his", PosTag::Pron}, {"its", PosTag::Pron}, {"their", PosTag::Pron},
      {"my", PosTag::Pron}, {"your", PosTag::Pron}, {"our", PosTag::Pron},
      {"himself", PosTag::Pron}, {"herself", PosTag::Pron},
      {"itself", PosTag::Pron}, {"themselves", PosTag::Pron},
      {"who", PosTag::Pron}, {"whom", PosTag::Pron}, {"what", PosTag::Pron},
      {"something", PosTag::Pron}, {"anything", PosTag::Pron},
      {"nothing", PosTag::Pron}, {"everything", PosTag::Pron},
      {"someone", PosTag::Pron}, {"everyone", PosTag::Pron},
      // adpositions
      {"in", PosTag::Adp}, {"on", PosTag::Adp}, {"at", PosTag::Adp},
      {"of", PosTag::Adp}, {"for", PosTag::Adp}, {"with", PosTag::Adp},
      {"from", PosTag::Adp}, {"by", PosTag::Adp}, {"about", PosTag::Adp},
      {"into", PosTag::Adp}, {"over", PosTag::Adp}, {"under", PosTag::Adp},
      {"after", PosTag::Adp}, {"before", PosTag::Adp},
      {"between", PosTag::Adp}, {"during", PosTag::Adp},
      {"without", PosTag::Adp}, {"through", PosTag::Adp},
      {"against", PosTag::Adp}, {"around", PosTag::Adp},
      {"near", PosTag::Adp}, {"behind", PosTag::Adp}, {"up", PosTag::Adp},
      {"down", PosTag::Adp}, {"out", PosTag::Adp}, {"off", PosTag::Adp},
      // conjunctions
      {"and", PosTag::Conj}, {"or", PosTag::Conj}, {"but", PosTag::Conj},
      {"nor", PosTag::Conj}, {"because", PosTag::Conj},
      {"although", PosTag::Conj}, {"while", PosTag::Conj},
      {"if", PosTag::Conj}, {"than", PosTag::Conj}, {"whether", PosTag::Conj},
      {"so", PosTag::Conj},
      // auxiliaries and copulas
      {"is", PosTag::Aux}, {"was", PosTag::Aux}, {"are", PosTag::Aux},
      {"were", PosTag::Aux}, {"be", PosTag::Aux}, {"been", PosTag::Aux},
      {"being", PosTag::Aux}, {"am", PosTag::Aux}, {"did", PosTag::Aux},
      {"do", PosTag::Aux}, {"does", PosTag::Aux}, {"has", PosTag::Aux},
      {"have", PosTag::Aux}, {"had", PosTag::Aux}, {"can", PosTag::Aux},
      {"could", PosTag::Aux}, {"will", PosTag::Aux}, {"would", PosTag::Aux},
      {"shall", PosTag::Aux}, {"should", PosTag::Aux}, {"may", PosTag::Aux},
      {"might", PosTag::Aux}, {"must", PosTag::Aux},
      // particles
      {"to", PosTag::Prt},
      // adverbs
      {"not", PosTag::Adv}, {"very", PosTag::Adv}, {"too", PosTag::Adv},
      {"also", PosTag::Adv}, {"just", PosTag::Adv}, {"then", PosTag::Adv},
      {"now", PosTag::Adv}, {"never", PosTag::Adv}, {"always", PosTag::Adv},
      {"often", PosTag::Adv}, {"again", PosTag::Adv}, {"there", PosTag::Adv},
      {"here", PosTag::Adv}, {"when", PosTag::Adv}, {"where", PosTag::Adv},
      {"why", PosTag::Adv}, {"how", PosTag::Adv}, {"next", PosTag::Adv},
      // interjections
      {"oh", PosTag::Intj}, {"hey", PosTag::Intj}, {"wow", PosTag::Intj},
      {"hello", PosTag::Intj}, {"hi", PosTag::Intj}, {"yes", PosTag::Intj},
      {"yeah", PosTag::Intj}, {"okay", PosTag::Intj}, {"ok", PosTag::Intj},
      // small numerals
      {"one", PosTag::Num}, {"two", PosTag::Num}, {"three", PosTag::Num},
      {"four", PosTag::Num}, {"five", PosTag::Num}, {"six", PosTag::Num},
      {"seven", PosTag::Num}, {"eight", PosTag::Num}, {"nine", PosTag::Num},
      {"ten", PosTag::Num},
      // weekday/month names survive lower-casing as proper nouns
      {"monday", PosTag::Propn}, {"tuesday", PosTag::Propn},
      {"wednesday", PosTag::Propn}, {"thursday", PosTag::Propn},
      {"friday", PosTag::Propn}, {"saturday", PosTag::Propn},
      {"sunday", PosTag::Propn}, {"january", PosTag::Propn},
      {"february", PosTag::Propn}, {"march", PosTag::Propn},
      {"april", PosTag::Propn}, {"june", PosTag::Propn},
      {"july", PosTag::Propn}, {"august", PosTag::Propn},
      {"september", PosTag::Propn}, {"october", PosTag::Propn},
      {"november", PosTag::Propn}, {"december", PosTag::Propn},
      // frequent suffix-rule exceptions
      {"thing", PosTag::Noun}, {"morning", PosTag::Noun},
      {"evening", PosTag::Noun}, {"king", PosTag::Noun},
      {"ring", PosTag::Noun}, {"spring", PosTag::Noun},
      {"bed", PosTag::Noun}, {"red", PosTag::Adj}, {"good", PosTag::Adj},
      {"bad", PosTag::Adj}, {"old", PosTag::Adj}, {"new", PosTag::Adj},
      {"big", PosTag::Adj}, {"small", PosTag::Adj}, {"dirty", PosTag::Adj},
      {"clean", PosTag::Adj},
  };
  return table;
}

bool ends_with(const std::string& s, const char* suffix) {
  const std::size_t n = std::char_traits<char>::length(suffix);
  return s.size() > n && s.compare(s.size() - n, n, suffix) == 0;
}

PosTag tag_one(const std::string& token) {
  const auto& lex = lexicon();
  if (auto it = lex.find(token); it != lex.end()) return it->second;
  if (std::isdigit(static_cast<unsigned char>(token.front()))) {
    return PosTag::Num;
  }
  if (ends_with(token, "ing") || ends_with(token, "ed") ||
      ends_with(token, "ize") || ends_with(token, "ise") ||
      ends_with(token, "ify")) {
    return PosTag::Verb;
  }
  if (ends_with(token, "ly")) return PosTag::Adv;
  if (ends_with(token, "ous") || ends_with(token, "ful") ||
      ends_with(token, "ive") || ends_with(token, "less") ||
      ends_with(token, "ish") || ends_with(token, "able") ||
      ends_with(token, "ible")) {
    return PosTag::Adj;
  }
  if (ends_with(token, "tion") || ends_with(token, "sion") ||
      ends_with(token, "ment") || ends_with(token, "ness") ||
      ends_with(token, "ity") || ends_with(token, "ship") ||
      ends_with(token, "hood")) {
    return PosTag::Noun;
  }
  return PosTag::Noun;
}

}  // namespace

std::vector<PosTag> pos_tag(const std::vector<std::string>& tokens) {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const std::string& t : tokens) tags.push_back(tag_one(t));
  return tags;
}

// --------------------------------------------------------------------------
// Match features
// --------------------------------------------------------------------------

std::vector<std::uint8_t> word_match(const std::vector<std::string>& seq,
                                     const std::vector<std::string>& others) {
  std::unordered_set<std::string> pool(others.begin(), others.end());
  std::vector<std::uint8_t> out;
  out.reserve(seq.size());
  for (const std::string& t : seq) {
    out.push_back(pool.count(t) ? 1 : 0);
  }
  return out;
}

std::vector<std::uint8_t> fuzzy_match(const std::vector<std::string>& seq,
                                      const std::vector<std::string>& others) {
  std::vector<std::uint8_t> out;
  out.reserve(seq.size());
  for (const std::string& t : seq) {
    bool hit = false;
    for (const std::string& o : others) {
      const std::string& shorter = t.size() <= o.size() ? t : o;
      const std::string& longer = t.size() <= o.size() ? o : t;
      if (shorter.size() >= 4 && longer.find(shorter) != std::string::npos) {
        hit = true;
        break;
      }
    }
    out.push_back(hit ? 1 : 0);
  }
  return out;
}

// --------------------------------------------------------------------------
// Vocab
// --------------------------------------------------------------------------

Vocab::Vocab() {
  tokens_ = {"<pad>", "<unk>"};
  index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

std::size_t Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::size_t Vocab::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("vocab " + path + ": cannot open for writing");
  for (std::size_t i = 2; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\n';
  }
  out.flush();
  if (!out) throw ParseError("vocab " + path + ": write failed");
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("vocab " + path + ": cannot open");
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.add(line);
  }
  return v;
}

// --------------------------------------------------------------------------
// Corpus loading
// --------------------------------------------------------------------------

namespace {

std::vector<PosTag> parse_supplied_tags(const json& arr,
                                        std::size_t expected_len,
                                        const std::string& where) {
  if (!arr.is_array()) {
    throw ParseError(where + ": \"pos\" entries must be arrays of tag names");
  }
  if (arr.size() != expected_len) {
    throw ParseError(where + ": supplied " + std::to_string(arr.size()) +
                     " tags for " + std::to_string(expected_len) + " tokens");
  }
  std::vector<PosTag> tags;
  tags.reserve(arr.size());
  for (const json& j : arr) {
    if (!j.is_string()) {
      throw ParseError(where + ": tags must be strings");
    }
    const auto t = pos_tag_from_name(j.get<std::string>());
    if (!t) {
      throw ParseError(where + ": unknown tag \"" + j.get<std::string>() +
                       "\"; valid tags: " + valid_pos_tags());
    }
    tags.push_back(*t);
  }
  return tags;
}

SeqFeatures make_seq(const std::string& raw, const json* supplied_tags,
                     std::size_t max_len, const std::string& where) {
  SeqFeatures seq;
  seq.tokens = preprocess(raw);
  if (supplied_tags != nullptr) {
    seq.pos = parse_supplied_tags(*supplied_tags, seq.tokens.size(), where);
  } else {
    seq.pos = pos_tag(seq.tokens);
  }
  if (seq.tokens.size() > max_len) {  // keep the head
    seq.tokens.resize(max_len);
    seq.pos.resize(max_len);
  }
  return seq;
}

std::vector<std::string> concat_tokens(
    std::initializer_list<const std::vector<std::string>*> lists) {
  std::vector<std::string> all;
  for (const auto* l : lists) all.insert(all.end(), l->begin(), l->end());
  return all;
}

}  // namespace

std::vector<Instance> load_corpus(const std::string& path, VocabMode mode,
                                  Vocab& vocab, const CorpusLimits& limits) {
  std::ifstream in(path);
  if (!in) throw ParseError("corpus " + path + ": cannot open");
  std::vector<Instance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) {
      throw ParseError(where + ": expected a JSON object");
    }
    const auto require_string = [&](const char* field) -> std::string {
      if (!j.contains(field)) {
        throw ParseError(where + ": missing field \"" + field + "\"");
      }
      if (!j[field].is_string()) {
        throw ParseError(where + ": field \"" + field + "\" must be a string");
      }
      return j[field].get<std::string>();
    };

    Instance inst;
    inst.id = require_string("id");
    const std::string text_raw = require_string("text");
    const std::string question_raw = require_string("question");

    if (!j.contains("choices")) {
      throw ParseError(where + ": missing field \"choices\"");
    }
    const json& choices = j["choices"];
    if (!choices.is_array() || choices.size() != 2) {
      throw ParseError(where + ": field \"choices\" must hold exactly 2 "
                       "strings, got " +
                       std::to_string(choices.is_array() ? choices.size()
                                                         : 0));
    }
    std::array<std::string, 2> choice_raw;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!choices[k].is_string()) {
        throw ParseError(where + ": choices must be strings");
      }
      choice_raw[k] = choices[k].get<std::string>();
    }

    if (j.contains("label")) {
      if (!j["label"].is_number_integer() ||
          (j["label"].get<int>() != 0 && j["label"].get<int>() != 1)) {
        throw ParseError(where + ": field \"label\" must be 0 or 1");
      }
      inst.label = j["label"].get<int>();
    }

    const json* pos_text = nullptr;
    const json* pos_question = nullptr;
    const json* pos_choice[2] = {nullptr, nullptr};
    if (j.contains("pos")) {
      const json& p = j["pos"];
      if (!p.is_object()) {
        throw ParseError(where + ": field \"pos\" must be an object");
      }
      if (p.contains("text")) pos_text = &p["text"];
      if (p.contains("question")) pos_question = &p["question"];
      if (p.contains("choices")) {
        if (!p["choices"].is_array() || p["choices"].size() != 2) {
          throw ParseError(where + ": \"pos\".\"choices\" must hold 2 arrays");
        }
        pos_choice[0] = &p["choices"][0];
        pos_choice[1] = &p["choices"][1];
      }
    }

    inst.text = make_seq(text_raw, pos_text, limits.text_max, where);
    inst.question = make_seq(question_raw, pos_question, limits.question_max,
                             where);
    for (std::size_t k = 0; k < 2; ++k) {
      inst.choices[k] = make_seq(choice_raw[k], pos_choice[k],
                                 limits.choice_max, where);
    }

    // Matching policy: the text is checked against question and choices;
    // question and choices are checked against the text.
    const auto text_others = concat_tokens({&inst.question.tokens,
                                            &inst.choices[0].tokens,
                                            &inst.choices[1].tokens});
    inst.text.match_feat = word_match(inst.text.tokens, text_others);
    inst.text.fuzzy_feat = fuzzy_match(inst.text.tokens, text_others);
    inst.question.match_feat = word_match(inst.question.tokens,
                                          inst.text.tokens);
    inst.question.fuzzy_feat = fuzzy_match(inst.question.tokens,
                                           inst.text.tokens);
    for (std::size_t k = 0; k < 2; ++k) {
      inst.choices[k].match_feat = word_match(inst.choices[k].tokens,
                                              inst.text.tokens);
      inst.choices[k].fuzzy_feat = fuzzy_match(inst.choices[k].tokens,
                                               inst.text.tokens);
    }

    if (mode == VocabMode::Build) {
      for (const std::string& t : inst.text.tokens) vocab.add(t);
      for (const std::string& t : inst.question.tokens) vocab.add(t);
      for (const auto& c : inst.choices) {
        for (const std::string& t : c.tokens) vocab.add(t);
      }
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

}  // namespace hma
