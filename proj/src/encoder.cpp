#include "memen/encoder.hpp"

#include <stdexcept>

#include "memen/ops.hpp"

namespace memen {

namespace {

std::vector<std::string> utf8_chars(const std::string& word) {
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < word.size();) {
    const auto lead = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, word.size() - i);
    chars.push_back(word.substr(i, len));
    i += len;
  }
  return chars;
}

Vocab with_unknown(const Vocab& tags) {
  Vocab v = tags;
  v.add(kUnknownSymbol);
  return v;
}

Tensor tag_matrix(const std::optional<Tensor>& vectors, std::size_t rows, std::size_t dim, Rng& rng,
                  const char* what) {
  // The trailing "<unk>" row stays zero.
  Tensor table = Tensor::zeros({rows, dim});
  if (vectors) {
    if (vectors->rows() + 1 != rows || vectors->cols() != dim) {
      throw ShapeError(std::string(what) + " vectors " + shape_to_string(vectors->shape()) +
                       " do not fit a vocabulary of " + std::to_string(rows - 1) + " tags");
    }
    std::copy(vectors->data().begin(), vectors->data().end(), table.data().begin());
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i + 1 < rows; ++i)
      for (std::size_t j = 0; j < dim; ++j) table.at(i, j) = rng.uniform(-bound, bound);
  }
  return table;
}

// Window ids for the char CNN: each window contributes `width` consecutive ids.
void append_windows(std::vector<int>& out, std::span<const int> chars, std::size_t width) {
  std::vector<int> padded(chars.begin(), chars.end());
  while (padded.size() < width) padded.push_back(0);
  const auto windows = padded.size() - width + 1;
  for (std::size_t w = 0; w < windows; ++w)
    for (std::size_t k = 0; k < width; ++k) out.push_back(padded[w + k]);
}

std::size_t window_count(std::size_t chars, std::size_t width) { return chars < width ? 1 : chars - width + 1; }

}  // namespace

std::vector<int> Vocabularies::char_ids(const std::string& word) const {
  std::vector<int> ids;
  for (const auto& c : utf8_chars(word)) ids.push_back(chars.id_or(c, 1));
  return ids;
}

int Vocabularies::pos_id(const std::string& tag) const {
  return pos.id_or(tag, static_cast<int>(pos.size()) - 1);
}

int Vocabularies::ner_id(const std::string& tag) const {
  return ner.id_or(tag, static_cast<int>(ner.size()) - 1);
}

Vocabularies Vocabularies::build(const Dataset& data, const Vocab& pos_tags, const Vocab& ner_tags) {
  Vocabularies v;
  v.words.add(kOovWord);
  v.chars.add(kPadChar);
  v.chars.add(kUnknownSymbol);
  for (const auto& ex : data.examples) {
    for (const auto* tokens : {&ex.passage, &ex.question}) {
      for (const auto& t : *tokens) {
        v.words.add(t.word);
        for (const auto& c : utf8_chars(t.word)) v.chars.add(c);
      }
    }
  }
  v.pos = with_unknown(pos_tags);
  v.ner = with_unknown(ner_tags);
  return v;
}

std::vector<TokenIds> token_ids(const Vocabularies& vocab, const std::vector<Token>& tokens) {
  std::vector<TokenIds> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    ids.push_back(TokenIds{vocab.word_id(t.word), vocab.char_ids(t.word), vocab.pos_id(t.pos), vocab.ner_id(t.ner)});
  }
  return ids;
}

std::size_t EncoderParams::input_dim() const {
  std::size_t dim = config.word_dim + config.char_filters;
  if (config.use_pos) dim += pos_table.cols();
  if (config.use_ner) dim += ner_table.cols();
  return dim;
}

EncoderParams make_encoder(ParamStore& store, const EncoderConfig& config, const Vocabularies& vocab,
                           const EncoderInit& init, Rng& rng) {
  EncoderParams p;
  p.config = config;
  if (init.pretrained_words) {
    if (init.pretrained_words->rows() != vocab.words.size()) {
      throw ShapeError("pretrained word table has " + std::to_string(init.pretrained_words->rows()) +
                       " rows for a vocabulary of " + std::to_string(vocab.words.size()));
    }
    p.config.word_dim = init.pretrained_words->cols();
    p.word_table = store.add("encoder.word_table", init.pretrained_words->clone(), false);
  } else {
    p.word_table = store.add("encoder.word_table", uniform_init(vocab.words.size(), config.word_dim, rng));
  }
  p.char_table = store.add("encoder.char_table", uniform_init(vocab.chars.size(), config.char_dim, rng));
  p.char_filters = store.add("encoder.char_cnn.filters",
                             uniform_init(config.char_width * config.char_dim, config.char_filters, rng));
  p.char_bias = store.add("encoder.char_cnn.bias", Tensor::zeros({1, config.char_filters}));
  const auto pos_dim = init.pos_vectors ? init.pos_vectors->cols() : init.tag_dim;
  const auto ner_dim = init.ner_vectors ? init.ner_vectors->cols() : init.tag_dim;
  if (config.use_pos) {
    p.pos_table = store.add("encoder.pos_table", tag_matrix(init.pos_vectors, vocab.pos.size(), pos_dim, rng, "POS"),
                            false);
  }
  if (config.use_ner) {
    p.ner_table = store.add("encoder.ner_table", tag_matrix(init.ner_vectors, vocab.ner.size(), ner_dim, rng, "NER"),
                            false);
  }
  p.lstm = make_bilstm(store, "encoder.lstm", p.input_dim(), config.hidden, rng);
  return p;
}

Tensor char_cnn_embed(const EncoderParams& params, std::span<const int> char_ids) {
  const auto width = params.config.char_width;
  std::vector<int> windows;
  append_windows(windows, char_ids, width);
  const auto count = windows.size() / width;
  const Tensor stacked = ops::reshape(ops::embedding(params.char_table, windows),
                                      {count, width * params.char_table.cols()});
  const Tensor responses = ops::tanh(ops::add_row(ops::matmul(stacked, params.char_filters), params.char_bias));
  return ops::max(responses, 0);
}

Tensor embed_token(const EncoderParams& params, const TokenIds& token) {
  return embed_sequence(params, {token});
}

Tensor embed_sequence(const EncoderParams& params, const std::vector<TokenIds>& tokens) {
  if (tokens.empty()) throw ShapeError("embed_sequence: empty token sequence");
  const auto width = params.config.char_width;
  std::vector<int> word_ids, pos_ids, ner_ids, windows;
  std::vector<std::size_t> counts;
  for (const auto& t : tokens) {
    word_ids.push_back(t.word);
    pos_ids.push_back(t.pos);
    ner_ids.push_back(t.ner);
    append_windows(windows, t.chars, width);
    counts.push_back(window_count(t.chars.size(), width));
  }
  // All windows of all tokens go through the filters in one product.
  const auto total = windows.size() / width;
  const Tensor stacked =
      ops::reshape(ops::embedding(params.char_table, windows), {total, width * params.char_table.cols()});
  const Tensor responses = ops::tanh(ops::add_row(ops::matmul(stacked, params.char_filters), params.char_bias));
  std::vector<Tensor> pooled;
  std::size_t offset = 0;
  for (auto c : counts) {
    pooled.push_back(ops::max(ops::slice_rows(responses, offset, c), 0));
    offset += c;
  }

  std::vector<Tensor> parts{ops::embedding(params.word_table, word_ids),
                            tokens.size() == 1 ? pooled.front() : ops::concat(pooled, 0)};
  if (params.config.use_pos) parts.push_back(ops::embedding(params.pos_table, pos_ids));
  if (params.config.use_ner) parts.push_back(ops::embedding(params.ner_table, ner_ids));
  return ops::concat(parts, 1);
}

EncodedSequence encode_sequence(const EncoderParams& params, const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() == 0) throw ShapeError("encode_sequence: empty sequence");
  const BiLstmRun run = run_bilstm(params.lstm, embeddings);
  return EncodedSequence{run.reps, run.last_state};
}

}  // namespace memen
