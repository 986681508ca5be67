#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "memen/rng.hpp"
#include "memen/tensor.hpp"
#include "memen/vocab.hpp"

namespace memen {

struct Token {
  std::string word;
  std::string pos;
  std::string ner;

  bool operator==(const Token&) const = default;
};

/// One pre-tagged extractive QA instance. Answer indices are 1-based and
/// inclusive: 1 <= answer_start <= answer_end <= passage.size().
struct TaggedExample {
  std::string id;
  std::vector<Token> passage;
  std::vector<Token> question;
  int answer_start = 1;
  int answer_end = 1;
  std::string answer_text;

  bool operator==(const TaggedExample&) const = default;
};

enum class Split { kTrain, kDev, kTest };

struct Dataset {
  std::vector<TaggedExample> examples;
  Split split = Split::kTrain;

  bool operator==(const Dataset&) const = default;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Space-joined passage words for the 1-based inclusive span.
std::string span_text(const std::vector<Token>& passage, int start, int end);

/// Throws DataError naming the example when an invariant is violated.
void validate_example(const TaggedExample& example);

/// One JSON object (no trailing newline) in the dataset line format.
std::string serialize_example(const TaggedExample& example);
TaggedExample parse_example(const std::string& line);

Dataset load_dataset(const std::filesystem::path& path, Split split = Split::kTrain);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t n_examples = 200;
  std::size_t vocab_size = 50;
  std::size_t min_passage_len = 10;
  std::size_t max_passage_len = 16;
  /// Extra key/value facts per passage besides the one asked about.
  std::size_t distractors = 0;
};

inline const std::vector<std::string> kSyntheticPos = {"DT", "JJ",  "NN", "NNS", "VB",  "VBD",
                                                       "IN", "RB",  "CC", "PRP", "NNP", "CD"};
inline const std::vector<std::string> kSyntheticNer = {"O", "PER", "LOC", "ORG", "MISC"};

/// Key/value reading task. Each passage mixes filler words with one fact: a
/// key word immediately followed by a 1-3 token value segment, optionally
/// surrounded by distractor facts. The question names the key; the answer
/// is the value segment. Value tokens carry entity NER tags, all others "O".
Dataset generate_synthetic(const SyntheticOptions& options);

struct LoadedEmbeddings {
  Tensor table;  // vocab.size() x dim
  std::size_t dim = 0;
  double coverage = 0.0;  // fraction of vocab rows found in the file
};

/// Copies rows for vocabulary words present in the embedding file; every
/// other row is drawn uniformly in +-1/sqrt(dim) from `rng`.
LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Vocab& vocab, Rng& rng);

}  // namespace memen
