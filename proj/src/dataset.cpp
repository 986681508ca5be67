#include "memen/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "memen/embedding_file.hpp"

namespace memen {

using Json = nlohmann::ordered_json;

std::string span_text(const std::vector<Token>& passage, int start, int end) {
  std::string text;
  for (int i = start; i <= end; ++i) {
    if (i > start) text += ' ';
    text += passage.at(static_cast<std::size_t>(i - 1)).word;
  }
  return text;
}

void validate_example(const TaggedExample& example) {
  const auto fail = [&](const std::string& what) { throw DataError("example '" + example.id + "': " + what); };
  if (example.id.empty()) throw DataError("example with empty id");
  if (example.passage.empty()) fail("empty passage");
  if (example.question.empty()) fail("empty question");
  for (const auto* tokens : {&example.passage, &example.question}) {
    for (const auto& t : *tokens) {
      if (t.word.empty() || t.pos.empty()) fail("token with empty word or POS tag");
      if (t.ner.empty()) fail("token '" + t.word + "' with empty NER tag");
    }
  }
  const int n = static_cast<int>(example.passage.size());
  if (!(1 <= example.answer_start && example.answer_start <= example.answer_end && example.answer_end <= n)) {
    fail("answer span [" + std::to_string(example.answer_start) + ", " + std::to_string(example.answer_end) +
         "] out of range for passage of " + std::to_string(n) + " tokens");
  }
}

namespace {

Json tokens_to_json(const std::vector<Token>& tokens) {
  Json arr = Json::array();
  for (const auto& t : tokens) arr.push_back(Json::array({t.word, t.pos, t.ner}));
  return arr;
}

std::vector<Token> tokens_from_json(const Json& arr, const char* field) {
  if (!arr.is_array()) throw DataError(std::string("field '") + field + "' must be an array");
  std::vector<Token> tokens;
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 3 || !item[0].is_string() || !item[1].is_string() ||
        !item[2].is_string()) {
      throw DataError(std::string("field '") + field + "' entries must be [word, pos, ner] string triples");
    }
    tokens.push_back(Token{item[0].get<std::string>(), item[1].get<std::string>(), item[2].get<std::string>()});
  }
  return tokens;
}

const Json& require(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

std::string serialize_example(const TaggedExample& example) {
  Json obj;
  obj["id"] = example.id;
  obj["passage"] = tokens_to_json(example.passage);
  obj["question"] = tokens_to_json(example.question);
  obj["answer_start"] = example.answer_start;
  obj["answer_end"] = example.answer_end;
  obj["answer_text"] = example.answer_text;
  return obj.dump();
}

TaggedExample parse_example(const std::string& line) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw DataError("record is not a JSON object");
  TaggedExample ex;
  const auto& id = require(obj, "id");
  if (!id.is_string()) throw DataError("field 'id' must be a string");
  ex.id = id.get<std::string>();
  ex.passage = tokens_from_json(require(obj, "passage"), "passage");
  ex.question = tokens_from_json(require(obj, "question"), "question");
  const auto& start = require(obj, "answer_start");
  const auto& end = require(obj, "answer_end");
  if (!start.is_number_integer() || !end.is_number_integer()) {
    throw DataError("answer_start/answer_end must be integers");
  }
  ex.answer_start = start.get<int>();
  ex.answer_end = end.get<int>();
  const auto& text = require(obj, "answer_text");
  if (!text.is_string()) throw DataError("field 'answer_text' must be a string");
  ex.answer_text = text.get<std::string>();
  return ex;
}

Dataset load_dataset(const std::filesystem::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  Dataset dataset;
  dataset.split = split;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    TaggedExample ex;
    try {
      ex = parse_example(line);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      validate_example(ex);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(ex.id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate example id '" + ex.id + "'");
    }
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& ex : dataset.examples) out << serialize_example(ex) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

struct SyntheticLexicon {
  std::vector<int> keys;
  std::vector<int> values;
  std::vector<int> fillers;

  explicit SyntheticLexicon(std::size_t vocab_size) {
    // w0, w1 are the question words; the rest is split into keys, values, fillers.
    const auto open = static_cast<int>(vocab_size) - 2;
    const int key_count = std::max(2, open / 5);
    const int value_count = std::max(2, open / 4);
    for (int i = 0; i < key_count; ++i) keys.push_back(2 + i);
    for (int i = 0; i < value_count; ++i) values.push_back(2 + key_count + i);
    for (int w = 2 + key_count + value_count; w < static_cast<int>(vocab_size); ++w) fillers.push_back(w);
  }
};

Token make_token(int word, const std::string& pos, const std::string& ner) {
  return Token{"w" + std::to_string(word), pos, ner};
}

Token filler_token(int word) {
  // Fillers take one of the first ten POS tags, keyed by word id.
  return make_token(word, kSyntheticPos[static_cast<std::size_t>(word) % 10], "O");
}

Token key_token(int word) { return make_token(word, "NNP", "O"); }

Token value_token(int word) {
  return make_token(word, "CD", kSyntheticNer[1 + static_cast<std::size_t>(word) % 4]);
}

template <typename T>
const T& choose(const std::vector<T>& items, Rng& rng) {
  return items[rng.index(items.size())];
}

}  // namespace

Dataset generate_synthetic(const SyntheticOptions& options) {
  if (options.vocab_size < 10) throw std::invalid_argument("generate_synthetic: vocab_size must be >= 10");
  if (options.min_passage_len < 5 || options.max_passage_len < options.min_passage_len) {
    throw std::invalid_argument("generate_synthetic: passage lengths must satisfy 5 <= min <= max");
  }
  const SyntheticLexicon lex(options.vocab_size);
  const std::size_t facts = 1 + options.distractors;
  if (facts > lex.keys.size()) throw std::invalid_argument("generate_synthetic: more facts than key words");
  if (options.min_passage_len < facts * 4 + 1) {
    throw std::invalid_argument("generate_synthetic: passages too short for the requested facts");
  }
  if (lex.fillers.empty()) throw std::invalid_argument("generate_synthetic: vocabulary leaves no filler words");

  Rng rng(options.seed);
  Dataset dataset;
  for (std::size_t e = 0; e < options.n_examples; ++e) {
    const std::size_t len =
        options.min_passage_len + rng.index(options.max_passage_len - options.min_passage_len + 1);

    // Distinct keys; the first one is the fact being asked about.
    std::vector<int> keys;
    while (keys.size() < facts) {
      const int k = choose(lex.keys, rng);
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    std::vector<std::size_t> value_lens;
    std::size_t occupied = 0;
    for (std::size_t f = 0; f < facts; ++f) {
      value_lens.push_back(1 + rng.index(3));
      occupied += 1 + value_lens.back();
    }
    // Fillers are spread into facts + 1 gaps, in order.
    const std::size_t free_slots = len - occupied;
    std::vector<std::size_t> gaps(facts + 1, 0);
    for (std::size_t i = 0; i < free_slots; ++i) ++gaps[rng.index(gaps.size())];
    // Fact order in the passage is shuffled so the asked fact moves around.
    std::vector<std::size_t> order(facts);
    for (std::size_t f = 0; f < facts; ++f) order[f] = f;
    std::shuffle(order.begin(), order.end(), rng.engine());

    TaggedExample ex;
    ex.id = "synth-" + std::to_string(e);
    for (std::size_t slot = 0; slot <= facts; ++slot) {
      for (std::size_t g = 0; g < gaps[slot]; ++g) ex.passage.push_back(filler_token(choose(lex.fillers, rng)));
      if (slot == facts) break;
      const auto f = order[slot];
      ex.passage.push_back(key_token(keys[f]));
      const int start = static_cast<int>(ex.passage.size()) + 1;
      for (std::size_t v = 0; v < value_lens[f]; ++v) ex.passage.push_back(value_token(choose(lex.values, rng)));
      if (f == 0) {
        ex.answer_start = start;
        ex.answer_end = start + static_cast<int>(value_lens[f]) - 1;
      }
    }
    ex.question = {make_token(0, "PRP", "O"), make_token(1, "VB", "O"), key_token(keys[0])};
    ex.answer_text = span_text(ex.passage, ex.answer_start, ex.answer_end);
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path, const Vocab& vocab, Rng& rng) {
  const EmbeddingFile file = read_embedding_file(path);
  LoadedEmbeddings out;
  out.dim = file.dim;
  const auto rows = std::max<std::size_t>(vocab.size(), 1);
  std::vector<double> values(rows * file.dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(file.dim));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  std::unordered_map<std::string, std::size_t> file_rows;
  for (std::size_t r = 0; r < file.tokens.size(); ++r) file_rows.emplace(file.tokens[r], r);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto found = file_rows.find(vocab.token(static_cast<int>(i)));
    if (found == file_rows.end()) continue;
    ++covered;
    std::copy_n(file.values.begin() + static_cast<long>(found->second * file.dim), file.dim,
                values.begin() + static_cast<long>(i * file.dim));
  }
  out.table = Tensor({rows, file.dim}, std::move(values));
  out.coverage = vocab.size() == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(vocab.size());
  return out;
}

}  // namespace memen
