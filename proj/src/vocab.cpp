#include "memen/vocab.hpp"

#include <stdexcept>

namespace memen {

Vocab::Vocab(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add(t);
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<int> Vocab::find(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id_or(const std::string& token, int fallback) const { return find(token).value_or(fallback); }

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocab: id " + std::to_string(id) + " out of range (size " +
                            std::to_string(tokens_.size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

}  // namespace memen
