#include "memen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace memen {

namespace {

// Streams derived from the run seed, so shuffling and dropout never share draws.
constexpr std::uint64_t kShuffleStream = 0x5eed0001;
constexpr std::uint64_t kDropoutStream = 0x5eed0002;
constexpr std::uint64_t kModelStream = 0x5eed0003;
constexpr std::uint64_t kTagStream = 0x5eed0004;
constexpr std::uint64_t kWordStream = 0x5eed0005;

std::string fixed(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

tags::TagEmbeddingTable train_tag_table(const TrainConfig& config, const Dataset& data, bool ner) {
  const auto corpus = tags::build_corpus(tag_sequences(data, ner));
  tags::SkipGramOptions options;
  options.dim = config.tag_dim;
  options.window = config.tag_window;
  options.epochs = config.tag_epochs;
  options.seed = config.seed ^ kTagStream ^ (ner ? 1u : 0u);
  return tags::train_skipgram(corpus, options);
}

// Tags seen in `data` in first-appearance order; used when the skip-gram
// corpus is empty after screening and the table falls back to random rows.
Vocab observed_tags(const Dataset& data, bool ner) {
  Vocab v;
  for (const auto& seq : tag_sequences(data, ner)) {
    for (const auto& t : seq) v.add(t);
  }
  return v;
}

}  // namespace

void Ablations::disable(const std::string& name) {
  if (name == "integral") {
    integral = false;
  } else if (name == "query_sim") {
    query_sim = false;
  } else if (name == "context_sim") {
    context_sim = false;
  } else if (name == "gate") {
    gate = false;
  } else if (name == "pos_tags") {
    pos_tags = false;
  } else if (name == "ner_tags") {
    ner_tags = false;
  } else {
    throw std::invalid_argument("unknown ablation '" + name +
                                "' (expected integral, query_sim, context_sim, pos_tags, ner_tags or gate)");
  }
}

std::vector<std::string> Ablations::disabled() const {
  std::vector<std::string> out;
  if (!integral) out.push_back("integral");
  if (!query_sim) out.push_back("query_sim");
  if (!context_sim) out.push_back("context_sim");
  if (!pos_tags) out.push_back("pos_tags");
  if (!ner_tags) out.push_back("ner_tags");
  if (!gate) out.push_back("gate");
  return out;
}

void TrainConfig::validate() const {
  if (hops < 1) throw std::invalid_argument("hops must be >= 1");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be a finite value >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (word_dim < 1 || char_dim < 1 || tag_dim < 1) throw std::invalid_argument("embedding sizes must be >= 1");
  if (!ablations.integral && !ablations.query_sim && !ablations.context_sim) {
    throw std::invalid_argument("all three matching blocks ablated, nothing to fuse");
  }
}

ModelConfig model_config(const TrainConfig& config) {
  ModelConfig m;
  m.encoder.word_dim = config.word_dim;
  m.encoder.char_dim = config.char_dim;
  m.encoder.hidden = config.hidden;
  m.encoder.use_pos = config.ablations.pos_tags;
  m.encoder.use_ner = config.ablations.ner_tags;
  m.hops = config.hops;
  m.matching.integral = config.ablations.integral;
  m.matching.query_sim = config.ablations.query_sim;
  m.matching.context_sim = config.ablations.context_sim;
  m.matching.gate = config.ablations.gate;
  m.end_not_before_start = config.end_not_before_start;
  return m;
}

void adadelta_update(std::span<double> values, std::span<const double> grads, AdaDeltaSlot& slot, double lr,
                     double rho, double eps) {
  if (values.size() != grads.size()) throw ShapeError("adadelta: gradient size does not match parameter size");
  if (slot.grad_sq.empty()) {
    slot.grad_sq.assign(values.size(), 0.0);
    slot.update_sq.assign(values.size(), 0.0);
  }
  if (slot.grad_sq.size() != values.size()) throw ShapeError("adadelta: state size does not match parameter size");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    slot.grad_sq[i] = rho * slot.grad_sq[i] + (1.0 - rho) * g * g;
    const double u = std::sqrt(slot.update_sq[i] + eps) / std::sqrt(slot.grad_sq[i] + eps) * g;
    values[i] -= lr * u;
    slot.update_sq[i] = rho * slot.update_sq[i] + (1.0 - rho) * u * u;
  }
}

void adadelta_step(AdaDeltaState& state, ParamStore& params, double lr, double rho, double eps) {
  for (const auto& [name, slot] : params.slots()) {
    if (!slot.trainable || !slot.value.has_grad()) continue;
    for (double g : slot.value.grad()) {
      if (!std::isfinite(g)) throw TrainingDiverged("non-finite gradient in parameter '" + name + "'");
    }
  }
  for (const auto& [name, slot] : params.slots()) {
    if (!slot.trainable || !slot.value.has_grad()) continue;
    Tensor value = slot.value;
    adadelta_update(value.data(), value.grad(), state.slots[name], lr, rho, eps);
  }
}

std::string TrainingLog::to_csv() const {
  std::string out = "epoch,loss,em,f1\n";
  for (const auto& r : epochs) {
    out += std::to_string(r.epoch) + "," + fixed(r.loss) + "," + fixed(r.em) + "," + fixed(r.f1) + "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> tag_sequences(const Dataset& data, bool ner) {
  std::vector<std::vector<std::string>> out;
  out.reserve(2 * data.examples.size());
  for (const auto& ex : data.examples) {
    for (const auto* tokens : {&ex.passage, &ex.question}) {
      std::vector<std::string> seq;
      seq.reserve(tokens->size());
      for (const auto& t : *tokens) seq.push_back(ner ? t.ner : t.pos);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

PreparedInputs prepare_inputs(const TrainConfig& config, const Dataset& data,
                              const std::optional<std::filesystem::path>& word_vectors,
                              const std::optional<tags::TagEmbeddingTable>& pos_table,
                              const std::optional<tags::TagEmbeddingTable>& ner_table) {
  PreparedInputs prepared;
  prepared.init.tag_dim = config.tag_dim;

  auto tag_table = [&](const std::optional<tags::TagEmbeddingTable>& given, bool ner, bool used,
                       std::optional<Tensor>& vectors) -> Vocab {
    if (given) {
      vectors = given->input_vectors;
      return given->vocab;
    }
    if (used) {
      const auto seqs = tag_sequences(data, ner);
      const bool any_long = std::any_of(seqs.begin(), seqs.end(),
                                        [](const auto& s) { return s.size() >= tags::kMinSentenceLength; });
      if (any_long) {
        auto table = train_tag_table(config, data, ner);
        vectors = table.input_vectors;
        return table.vocab;
      }
    }
    return observed_tags(data, ner);
  };
  const Vocab pos = tag_table(pos_table, false, config.ablations.pos_tags, prepared.init.pos_vectors);
  const Vocab ner = tag_table(ner_table, true, config.ablations.ner_tags, prepared.init.ner_vectors);
  prepared.vocab = Vocabularies::build(data, pos, ner);

  if (word_vectors) {
    Rng rng(config.seed ^ kWordStream);
    auto loaded = load_embeddings(*word_vectors, prepared.vocab.words, rng);
    prepared.init.pretrained_words = loaded.table;
  }
  return prepared;
}

MemenModel build_model(const TrainConfig& config, const PreparedInputs& inputs) {
  config.validate();
  return MemenModel(model_config(config), inputs.vocab, inputs.init, config.seed ^ kModelStream);
}

std::vector<AnswerRecord> gold_answers(const Dataset& data) {
  std::vector<AnswerRecord> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) out.push_back({ex.id, ex.answer_text});
  return out;
}

std::vector<AnswerRecord> predict_answers(const MemenModel& model, const Dataset& data,
                                          std::vector<SpanPrediction>* spans) {
  std::vector<AnswerRecord> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) {
    auto p = model.predict(ex);
    out.push_back({ex.id, span_text(ex.passage, p.start, p.end)});
    if (spans) spans->push_back(std::move(p));
  }
  return out;
}

Scores evaluate_model(const MemenModel& model, const Dataset& data, bool char_level) {
  return evaluate(predict_answers(model, data), gold_answers(data), char_level);
}

TrainingLog train(const TrainConfig& config, const Dataset& data, MemenModel& model, const EpochObserver& observer) {
  config.validate();
  if (data.examples.empty()) throw std::invalid_argument("train: dataset is empty");
  Rng shuffle_rng(config.seed ^ kShuffleStream);
  Rng dropout_rng(config.seed ^ kDropoutStream);
  const DropoutContext dropout{config.dropout, &dropout_rng};

  AdaDeltaState state;
  TrainingLog log;
  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParamStore& params = model.params();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      const double scale = 1.0 / static_cast<double>(end - begin);
      params.clear_grads();
      for (std::size_t i = begin; i < end; ++i) {
        Tape tape;
        TapeScope scope(tape);
        auto pass = model.forward(data.examples[order[i]], dropout, true);
        const double value = pass.loss.item();
        if (!std::isfinite(value)) {
          throw TrainingDiverged("loss is " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index + 1) + " (example '" +
                                 data.examples[order[i]].id + "')");
        }
        loss_sum += value;
        backward(ops::affine(pass.loss, scale));
      }
      try {
        adadelta_step(state, params, config.lr, config.rho, config.eps);
      } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index + 1));
      }
    }
    params.clear_grads();
    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / static_cast<double>(order.size());
    const Scores scores = evaluate_model(model, data);
    record.em = scores.em;
    record.f1 = scores.f1;
    log.epochs.push_back(record);
    if (observer && !observer(record)) break;
  }
  return log;
}

namespace {

Scores train_and_score(const TrainConfig& config, const Dataset& data, const Dataset* eval) {
  auto inputs = prepare_inputs(config, data);
  auto model = build_model(config, inputs);
  train(config, data, model);
  return evaluate_model(model, eval ? *eval : data);
}

std::string reference_note(const std::string& label) {
  if (label == "integral") return "reference: about 2% drop at full scale";
  if (label == "query_sim") return "reference: about 10% drop at full scale";
  return "";
}

}  // namespace

std::vector<SweepRow> hop_sweep(const TrainConfig& config, const Dataset& data, const std::vector<std::size_t>& hops,
                                const Dataset* eval) {
  if (hops.empty()) throw std::invalid_argument("hop_sweep: hop list is empty");
  std::vector<SweepRow> rows;
  for (auto k : hops) {
    TrainConfig c = config;
    c.hops = k;
    SweepRow row;
    row.label = std::to_string(k) + "-hop";
    row.hops = k;
    row.scores = train_and_score(c, data, eval);
    if (k == 3) row.note = "reference: best hop count at full scale";
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> ablation_sweep(const TrainConfig& config, const Dataset& data, const Dataset* eval) {
  config.validate();
  std::vector<SweepRow> rows;
  SweepRow base;
  base.label = "full";
  base.hops = config.hops;
  base.baseline = true;
  base.scores = train_and_score(config, data, eval);
  rows.push_back(base);
  for (const auto& name : kAblationNames) {
    TrainConfig c = config;
    c.ablations.disable(name);
    SweepRow row;
    row.label = name;
    row.hops = c.hops;
    row.scores = train_and_score(c, data, eval);
    row.em_delta = row.scores.em - base.scores.em;
    row.f1_delta = row.scores.f1 - base.scores.f1;
    row.note = reference_note(name);
    rows.push_back(row);
  }
  return rows;
}

std::string hop_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "hops,em,f1,note\n";
  for (const auto& r : rows) {
    out += std::to_string(r.hops) + "," + fixed(r.scores.em) + "," + fixed(r.scores.f1) + "," + r.note + "\n";
  }
  return out;
}

std::string ablation_csv(const std::vector<SweepRow>& rows) {
  std::string out = "ablation,baseline,em,f1,em_delta,f1_delta,note\n";
  for (const auto& r : rows) {
    out += r.label + "," + (r.baseline ? "1" : "0") + "," + fixed(r.scores.em) + "," + fixed(r.scores.f1) + "," +
           fixed(r.em_delta) + "," + fixed(r.f1_delta) + "," + r.note + "\n";
  }
  return out;
}

EnsembleDraw draw_ensemble_config(const TrainConfig& base, std::uint64_t seed) {
  Rng rng(seed);
  EnsembleDraw draw;
  draw.lr = rng.normal(kEnsembleLrMean, std::sqrt(kEnsembleLrVariance));
  draw.dropout = rng.normal(kEnsembleDropoutMean, std::sqrt(kEnsembleDropoutVariance));
  draw.config = base;
  draw.config.lr = std::max(draw.lr, kEnsembleMinLr);
  draw.config.dropout = std::clamp(draw.dropout, 0.0, kEnsembleMaxDropout);
  draw.config.seed = seed;
  return draw;
}

TrainConfig sample_ensemble_config(const TrainConfig& base, std::uint64_t seed) {
  return draw_ensemble_config(base, seed).config;
}

SpanPrediction combine_predictions(const std::vector<SpanPrediction>& members) {
  if (members.empty()) throw std::invalid_argument("ensemble: no members");
  const std::size_t n = members.front().start_dist.size();
  for (const auto& m : members) {
    if (m.start_dist.size() != n || m.end_dist.size() != n) {
      throw ShapeError("ensemble: members disagree on passage length");
    }
  }
  auto summed = [&](int s, int e) {
    double total = 0.0;
    for (const auto& m : members) total += m.start_dist[s - 1] * m.end_dist[e - 1];
    return total;
  };
  std::set<std::pair<int, int>> candidates;
  for (const auto& m : members) candidates.emplace(m.start, m.end);
  std::pair<int, int> best = *candidates.begin();
  double best_score = summed(best.first, best.second);
  for (const auto& c : candidates) {
    const double score = summed(c.first, c.second);
    if (score > best_score) {
      best = c;
      best_score = score;
    }
  }
  SpanPrediction out;
  out.start = best.first;
  out.end = best.second;
  out.confidence = best_score / static_cast<double>(members.size());
  out.start_dist.assign(n, 0.0);
  out.end_dist.assign(n, 0.0);
  for (const auto& m : members) {
    for (std::size_t i = 0; i < n; ++i) {
      out.start_dist[i] += m.start_dist[i] / static_cast<double>(members.size());
      out.end_dist[i] += m.end_dist[i] / static_cast<double>(members.size());
    }
  }
  return out;
}

SpanPrediction ensemble_predict(const std::vector<const MemenModel*>& models, const TaggedExample& example) {
  if (models.empty()) throw std::invalid_argument("ensemble: no members");
  std::vector<SpanPrediction> members;
  members.reserve(models.size());
  for (const auto* m : models) members.push_back(m->predict(example));
  if (members.size() == 1) return members.front();
  return combine_predictions(members);
}

}  // namespace memen
