#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace memen {

/// Bidirectional string <-> dense id map. Ids are assigned in insertion order.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(const std::vector<std::string>& tokens);

  /// Returns the existing id or assigns the next one.
  int add(const std::string& token);
  std::optional<int> find(const std::string& token) const;
  int id_or(const std::string& token, int fallback) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace memen
