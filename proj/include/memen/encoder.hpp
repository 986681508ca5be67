#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memen/dataset.hpp"
#include "memen/params.hpp"
#include "memen/recurrent.hpp"
#include "memen/vocab.hpp"

namespace memen {

inline constexpr const char* kOovWord = "<oov>";
inline constexpr const char* kPadChar = "<pad>";
inline constexpr const char* kUnknownSymbol = "<unk>";

/// Total lookups for words, characters and tags.
///
/// Word id 0 is the OOV row; char id 0 is padding and 1 an unknown character.
/// Tag vocabularies end with an "<unk>" entry for tags never seen when the
/// tag embeddings were trained.
struct Vocabularies {
  Vocab words;
  Vocab chars;
  Vocab pos;
  Vocab ner;

  int word_id(const std::string& word) const { return words.id_or(word, 0); }
  std::vector<int> char_ids(const std::string& word) const;
  int pos_id(const std::string& tag) const;
  int ner_id(const std::string& tag) const;

  /// Words and characters from `data`; tag vocabularies are the given tag
  /// tables' vocabularies plus "<unk>".
  static Vocabularies build(const Dataset& data, const Vocab& pos_tags, const Vocab& ner_tags);
};

struct EncoderConfig {
  std::size_t word_dim = 50;
  std::size_t char_dim = 8;
  std::size_t char_filters = 100;
  std::size_t char_width = 5;
  std::size_t hidden = 100;
  bool use_pos = true;
  bool use_ner = true;
};

struct TokenIds {
  int word = 0;
  std::vector<int> chars;
  int pos = 0;
  int ner = 0;
};

std::vector<TokenIds> token_ids(const Vocabularies& vocab, const std::vector<Token>& tokens);

struct EncoderParams {
  EncoderConfig config;
  Tensor word_table;    // |words| x word_dim
  Tensor char_table;    // |chars| x char_dim
  Tensor char_filters;  // (char_width * char_dim) x char_filters
  Tensor char_bias;     // 1 x char_filters
  Tensor pos_table;     // |pos| x d_pos, frozen
  Tensor ner_table;     // |ner| x d_ner, frozen
  BiLstmWeights lstm;

  std::size_t input_dim() const;
};

/// Frozen inputs for building an encoder. Tag matrices are ordered like the
/// tag vocabularies without their trailing "<unk>" row, which is added as zeros.
struct EncoderInit {
  std::optional<Tensor> pretrained_words;  // frozen when present
  std::optional<Tensor> pos_vectors;
  std::optional<Tensor> ner_vectors;
  std::size_t tag_dim = 20;
};

EncoderParams make_encoder(ParamStore& store, const EncoderConfig& config, const Vocabularies& vocab,
                           const EncoderInit& init, Rng& rng);

/// Per-filter max over every width-sized window of the padded character
/// embeddings, after tanh. Returns 1 x char_filters.
Tensor char_cnn_embed(const EncoderParams& params, std::span<const int> char_ids);

/// [word | char-CNN | POS | NER] for one token, as a 1 x input_dim row.
Tensor embed_token(const EncoderParams& params, const TokenIds& token);

/// embed_token for every token, as an n x input_dim matrix.
Tensor embed_sequence(const EncoderParams& params, const std::vector<TokenIds>& tokens);

struct EncodedSequence {
  Tensor reps;        // n x 2h
  Tensor last_state;  // 1 x 2h
};

EncodedSequence encode_sequence(const EncoderParams& params, const Tensor& embeddings);

}  // namespace memen
