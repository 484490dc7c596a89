#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hma/error.hpp"

namespace hma {

/// Coarse 17-tag universal-style tagset. Pad occupies id 0 so that row 0 of
/// the tag embedding table is the all-zero padding row.
enum class PosTag : int {
  Pad = 0,
  Noun,
  Verb,
  Adj,
  Adv,
  Pron,
  Det,
  Adp,
  Num,
  Conj,
  Prt,
  Aux,
  Propn,
  Intj,
  Sym,
  Punct,
  X,
};

inline constexpr int kPosTagCount = 17;

const char* pos_tag_name(PosTag t);
/// Parses the upper-case tag names ("NOUN", "VERB", ...); nullopt if unknown.
std::optional<PosTag> pos_tag_from_name(const std::string& name);
/// Comma-separated list of all valid tag names, for error messages.
std::string valid_pos_tags();

/// Lower-cases, strips characters outside [a-z0-9] (keeping apostrophes
/// with a letter or digit on both sides), and splits on whitespace.
/// Removal does not split: "high-quality" becomes one token.
std::vector<std::string> preprocess(const std::string& raw);

/// Rule tagger over preprocessed tokens: a closed-class lexicon, then
/// suffix heuristics, defaulting to NOUN.
std::vector<PosTag> pos_tag(const std::vector<std::string>& tokens);

/// 1 where the token occurs verbatim in `others`, else 0.
std::vector<std::uint8_t> word_match(const std::vector<std::string>& seq,
                                     const std::vector<std::string>& others);

/// 1 where some other-token is a substring of the token (or vice versa)
/// and the shorter of the two has at least 4 characters.
std::vector<std::uint8_t> fuzzy_match(const std::vector<std::string>& seq,
                                      const std::vector<std::string>& others);

/// One featurized sequence; all four lists are length-aligned.
struct SeqFeatures {
  std::vector<std::string> tokens;
  std::vector<PosTag> pos;
  std::vector<std::uint8_t> match_feat;
  std::vector<std::uint8_t> fuzzy_feat;

  std::size_t size() const { return tokens.size(); }
};

/// One (text, question, two choices, optional gold label) example.
struct Instance {
  std::string id;
  SeqFeatures text;
  SeqFeatures question;
  std::array<SeqFeatures, 2> choices;
  std::optional<int> label;
};

/// Token-index map; index 0 is padding, index 1 the unknown token.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocab();

  /// Adds a token if absent; returns its id either way.
  std::size_t add(const std::string& token);
  /// kUnk for tokens not in the vocabulary.
  std::size_t lookup(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class VocabMode { Build, Frozen };

struct CorpusLimits {
  std::size_t text_max = 300;
  std::size_t question_max = 20;
  std::size_t choice_max = 10;
};

/// Loads a JSONL corpus: one object per line with fields id, text, question,
/// choices (exactly two strings), optional label (0 or 1), and optional
/// pre-computed "pos" tags which take precedence over the rule tagger.
/// Instances come back preprocessed, featurized, and truncated to the
/// limits; the vocabulary is extended (Build) or left untouched (Frozen).
std::vector<Instance> load_corpus(const std::string& path, VocabMode mode,
                                  Vocab& vocab,
                                  const CorpusLimits& limits = {});

}  // namespace hma
