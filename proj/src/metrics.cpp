#include "memen/metrics.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace memen {

namespace {

std::vector<std::string> answer_tokens(const std::string& normalized, bool char_level) {
  std::vector<std::string> tokens;
  if (char_level) {
    for (char c : normalized) {
      if (c != ' ') tokens.emplace_back(1, c);
    }
    return tokens;
  }
  std::istringstream in(normalized);
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

}  // namespace

std::string normalize_answer(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

double exact_match(const std::string& prediction, const std::string& gold) {
  return normalize_answer(prediction) == normalize_answer(gold) ? 1.0 : 0.0;
}

double f1_score(const std::string& prediction, const std::string& gold, bool char_level) {
  const auto pred = answer_tokens(normalize_answer(prediction), char_level);
  const auto ref = answer_tokens(normalize_answer(gold), char_level);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  std::unordered_map<std::string, int> remaining;
  for (const auto& t : ref) ++remaining[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = remaining.find(t);
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

Scores evaluate(const std::vector<AnswerRecord>& predictions, const std::vector<AnswerRecord>& golds,
                bool char_level) {
  std::map<std::string, const AnswerRecord*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw std::invalid_argument("evaluate: duplicate prediction id '" + p.id + "'");
  }
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(golds.size()) + " gold answers");
  }
  Scores scores;
  if (golds.empty()) return scores;
  for (const auto& g : golds) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) throw std::invalid_argument("evaluate: no prediction for id '" + g.id + "'");
    scores.em += exact_match(it->second->text, g.text);
    scores.f1 += f1_score(it->second->text, g.text, char_level);
  }
  scores.em /= static_cast<double>(golds.size());
  scores.f1 /= static_cast<double>(golds.size());
  return scores;
}

}  // namespace memen
