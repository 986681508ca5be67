#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memen/tensor.hpp"
#include "memen/vocab.hpp"

// Skip-gram embeddings for POS and NER tag sequences. Each tagged sentence is
// treated as a "passage" of tag symbols and embedded with the full-softmax
// skip-gram objective.
namespace memen::tags {

/// Sentences with fewer tags than this are dropped from the corpus.
inline constexpr std::size_t kMinSentenceLength = 9;

struct TagCorpus {
  std::vector<std::vector<int>> sentences;
  Vocab vocab;

  std::size_t vocab_size() const { return vocab.size(); }
  std::size_t token_count() const;
};

TagCorpus build_corpus(const std::vector<std::vector<std::string>>& tagged_sentences);

/// Context positions of `center` in a sentence of `length` symbols with
/// window `window`: every center+i for i in [-window, window], i != 0,
/// clipped to the sentence.
std::vector<std::size_t> context_positions(std::size_t length, std::size_t center, std::size_t window);

/// counts(I, O) = number of (center I, context O) pairs in the corpus.
Tensor cooccurrence_counts(const TagCorpus& corpus, std::size_t window);

struct TagEmbeddingTable {
  Vocab vocab;
  Tensor input_vectors;   // V x d (v_w)
  Tensor output_vectors;  // V x d (v'_w)

  std::size_t dim() const { return input_vectors.cols(); }
  std::size_t vocab_size() const { return vocab.size(); }
  /// Input vector of `tag` as a 1 x d row. Throws for tags outside the vocab.
  std::vector<double> lookup(const std::string& tag) const;
};

/// p(w_out | w_in) under the full softmax over the vocabulary.
double skipgram_prob(const TagEmbeddingTable& table, int w_in, int w_out);

/// (1/N) sum_n sum_{context i} log p(w_{n+i} | w_n), differentiable in both
/// vector tables. N counts every symbol in the corpus.
Tensor skipgram_objective(const Tensor& input_vectors, const Tensor& output_vectors, const Tensor& counts,
                          std::size_t token_count);

double average_log_prob(const TagEmbeddingTable& table, const TagCorpus& corpus, std::size_t window);

struct SkipGramOptions {
  std::size_t dim = 20;
  std::size_t window = 2;
  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
};

struct SkipGramTrace {
  std::vector<double> objective;  // before the first step and after every step
};

/// Full-batch gradient ascent; one epoch is one step over the whole corpus.
TagEmbeddingTable train_skipgram(const TagCorpus& corpus, const SkipGramOptions& options,
                                 SkipGramTrace* trace = nullptr);

}  // namespace memen::tags
