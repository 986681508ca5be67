#include "memen/tag_embed.hpp"

#include <cmath>
#include <stdexcept>

#include "memen/ops.hpp"
#include "memen/rng.hpp"

namespace memen::tags {

std::size_t TagCorpus::token_count() const {
  std::size_t total = 0;
  for (const auto& s : sentences) total += s.size();
  return total;
}

TagCorpus build_corpus(const std::vector<std::vector<std::string>>& tagged_sentences) {
  if (tagged_sentences.empty()) throw std::invalid_argument("build_corpus: no sentences");
  TagCorpus corpus;
  for (const auto& sentence : tagged_sentences) {
    if (sentence.size() < kMinSentenceLength) continue;
    std::vector<int> ids;
    ids.reserve(sentence.size());
    for (const auto& tag : sentence) ids.push_back(corpus.vocab.add(tag));
    corpus.sentences.push_back(std::move(ids));
  }
  if (corpus.sentences.empty()) throw std::invalid_argument("empty corpus after screening");
  return corpus;
}

std::vector<std::size_t> context_positions(std::size_t length, std::size_t center, std::size_t window) {
  std::vector<std::size_t> positions;
  const std::size_t lo = center >= window ? center - window : 0;
  const std::size_t hi = std::min(length - 1, center + window);
  for (std::size_t p = lo; p <= hi; ++p) {
    if (p != center) positions.push_back(p);
  }
  return positions;
}

Tensor cooccurrence_counts(const TagCorpus& corpus, std::size_t window) {
  const auto v = corpus.vocab_size();
  Tensor counts = Tensor::zeros({v, v});
  for (const auto& sentence : corpus.sentences) {
    for (std::size_t n = 0; n < sentence.size(); ++n) {
      for (auto p : context_positions(sentence.size(), n, window)) {
        counts.at(static_cast<std::size_t>(sentence[n]), static_cast<std::size_t>(sentence[p])) += 1.0;
      }
    }
  }
  return counts;
}

std::vector<double> TagEmbeddingTable::lookup(const std::string& tag) const {
  const auto id = vocab.find(tag);
  if (!id) throw std::out_of_range("tag '" + tag + "' not in embedding vocabulary");
  auto row = input_vectors.data().subspan(static_cast<std::size_t>(*id) * dim(), dim());
  return {row.begin(), row.end()};
}

double skipgram_prob(const TagEmbeddingTable& table, int w_in, int w_out) {
  const auto v = static_cast<int>(table.vocab_size());
  if (w_in < 0 || w_in >= v || w_out < 0 || w_out >= v) {
    throw std::out_of_range("skipgram_prob: id outside vocabulary of " + std::to_string(v));
  }
  const auto d = table.dim();
  auto in = table.input_vectors.data().subspan(static_cast<std::size_t>(w_in) * d, d);
  std::vector<double> scores(static_cast<std::size_t>(v));
  double top = -INFINITY;
  for (int w = 0; w < v; ++w) {
    auto out = table.output_vectors.data().subspan(static_cast<std::size_t>(w) * d, d);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += out[k] * in[k];
    scores[static_cast<std::size_t>(w)] = s;
    top = std::max(top, s);
  }
  double total = 0.0;
  for (double s : scores) total += std::exp(s - top);
  return std::exp(scores[static_cast<std::size_t>(w_out)] - top) / total;
}

Tensor skipgram_objective(const Tensor& input_vectors, const Tensor& output_vectors, const Tensor& counts,
                          std::size_t token_count) {
  if (token_count == 0) throw std::invalid_argument("skipgram_objective: empty corpus");
  // scores(I, O) = v'_O . v_I
  const Tensor scores = ops::matmul(input_vectors, ops::transpose(output_vectors));
  const Tensor log_probs = ops::log(ops::softmax(scores, 1));
  return ops::affine(ops::sum_all(ops::mul(counts, log_probs)), 1.0 / static_cast<double>(token_count));
}

double average_log_prob(const TagEmbeddingTable& table, const TagCorpus& corpus, std::size_t window) {
  NoGradScope no_grad;
  return skipgram_objective(table.input_vectors, table.output_vectors, cooccurrence_counts(corpus, window),
                            corpus.token_count())
      .item();
}

TagEmbeddingTable train_skipgram(const TagCorpus& corpus, const SkipGramOptions& options, SkipGramTrace* trace) {
  if (corpus.sentences.empty()) throw std::invalid_argument("train_skipgram: empty corpus");
  if (options.dim < 1) throw std::invalid_argument("train_skipgram: dim must be >= 1");
  if (options.window < 1) throw std::invalid_argument("train_skipgram: window must be >= 1");
  if (options.epochs < 1) throw std::invalid_argument("train_skipgram: epochs must be >= 1");

  const auto v = corpus.vocab_size();
  const auto d = options.dim;
  Rng rng(options.seed);
  const double bound = 0.5 / std::sqrt(static_cast<double>(d));
  auto random_matrix = [&] {
    std::vector<double> values(v * d);
    for (auto& x : values) x = rng.uniform(-bound, bound);
    return Tensor({v, d}, std::move(values), true);
  };
  Tensor in = random_matrix();
  Tensor out = random_matrix();
  const Tensor counts = cooccurrence_counts(corpus, options.window);
  const auto n = corpus.token_count();

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Tape tape;
    TapeScope scope(tape);
    in.clear_grad();
    out.clear_grad();
    const Tensor objective = skipgram_objective(in, out, counts, n);
    if (trace) trace->objective.push_back(objective.item());
    tape.backward(objective);
    // Ascent on the objective.
    for (Tensor* p : {&in, &out}) {
      auto values = p->data();
      auto grad = p->grad();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += options.learning_rate * grad[i];
    }
  }
  in.clear_grad();
  out.clear_grad();
  in.set_requires_grad(false);
  out.set_requires_grad(false);
  TagEmbeddingTable table{corpus.vocab, in, out};
  if (trace) trace->objective.push_back(average_log_prob(table, corpus, options.window));
  return table;
}

}  // namespace memen::tags
