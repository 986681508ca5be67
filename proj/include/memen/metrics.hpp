#pragma once

#include <string>
#include <vector>

namespace memen {

struct AnswerRecord {
  std::string id;
  std::string text;
};

struct Scores {
  double em = 0.0;
  double f1 = 0.0;
};

/// Lowercases and collapses whitespace runs to single spaces, trimming ends.
std::string normalize_answer(const std::string& text);

double exact_match(const std::string& prediction, const std::string& gold);
/// Bag-of-tokens F1 over normalized whitespace tokens. Two empty answers
/// score 1. With `char_level` every non-space character is a token.
double f1_score(const std::string& prediction, const std::string& gold, bool char_level = false);

/// Mean EM and F1 over examples matched by id. Every gold id needs exactly
/// one prediction and vice versa.
Scores evaluate(const std::vector<AnswerRecord>& predictions, const std::vector<AnswerRecord>& golds,
                bool char_level = false);

}  // namespace memen
