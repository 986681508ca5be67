#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "memen/tensor.hpp"

namespace memen {

/// Text embedding format: first line "<count> <dim>", then one line per
/// symbol with the token followed by dim space-separated decimals.
struct EmbeddingFile {
  std::vector<std::string> tokens;
  std::size_t dim = 0;
  std::vector<double> values;  // tokens.size() x dim, row-major

  Tensor as_matrix() const;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EmbeddingFile read_embedding_file(const std::filesystem::path& path);
/// Writes rows of `matrix` labelled by `tokens`. Values use the shortest
/// representation that round-trips exactly.
void write_embedding_file(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                          const Tensor& matrix);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace memen
