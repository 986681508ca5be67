#include "memen/embedding_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace memen {

Tensor EmbeddingFile::as_matrix() const { return Tensor({tokens.size(), dim}, values); }

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

namespace {

bool parse_double(const std::string& text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
  EmbeddingFile file;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ":1: missing header");
  std::size_t count = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> file.dim) || (header >> extra) || file.dim == 0) {
      throw FormatError(path.string() + ":1: header must be '<count> <dim>'");
    }
  }
  file.tokens.reserve(count);
  file.values.reserve(count * file.dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::size_t seen = 0;
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      if (!parse_double(field, v)) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
      if (seen < file.dim) file.values.push_back(v);
      ++seen;
    }
    if (seen != file.dim) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(file.dim) +
                        " values for '" + token + "', got " + std::to_string(seen));
    }
    file.tokens.push_back(token);
  }
  if (file.tokens.size() != count) {
    throw FormatError(path.string() + ": header declares " + std::to_string(count) + " rows, found " +
                      std::to_string(file.tokens.size()));
  }
  return file;
}

void write_embedding_file(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                          const Tensor& matrix) {
  if (matrix.rows() != tokens.size()) {
    throw ShapeError("write_embedding_file: " + std::to_string(tokens.size()) + " tokens for " +
                     shape_to_string(matrix.shape()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embedding file " + path.string());
  const auto dim = matrix.cols();
  out << tokens.size() << ' ' << dim << '\n';
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out << tokens[i];
    for (std::size_t j = 0; j < dim; ++j) out << ' ' << format_double(matrix.at(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace memen
