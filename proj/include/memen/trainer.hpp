#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memen/dataset.hpp"
#include "memen/metrics.hpp"
#include "memen/model.hpp"
#include "memen/tag_embed.hpp"

namespace memen {

struct Ablations {
  bool integral = true;
  bool query_sim = true;
  bool context_sim = true;
  bool gate = true;
  bool pos_tags = true;
  bool ner_tags = true;

  /// Turns one switch off by name: integral, query_sim, context_sim, gate,
  /// pos_tags or ner_tags. Throws for unknown names.
  void disable(const std::string& name);
  std::vector<std::string> disabled() const;
};

inline const std::vector<std::string> kAblationNames = {"integral", "query_sim", "context_sim",
                                                        "pos_tags", "ner_tags",  "gate"};

struct TrainConfig {
  std::size_t hops = 3;
  std::size_t hidden = 100;
  double dropout = 0.2;
  double lr = 0.001;
  double rho = 0.95;
  double eps = 1e-6;
  std::size_t epochs = 200;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
  Ablations ablations;

  std::size_t word_dim = 50;
  std::size_t char_dim = 8;
  std::size_t tag_dim = 20;
  std::size_t tag_window = 2;
  std::size_t tag_epochs = 300;
  bool end_not_before_start = false;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

ModelConfig model_config(const TrainConfig& config);

struct AdaDeltaSlot {
  std::vector<double> grad_sq;    // E[g^2]
  std::vector<double> update_sq;  // E[dx^2], unscaled updates
};

struct AdaDeltaState {
  std::map<std::string, AdaDeltaSlot> slots;
};

/// AdaDelta on one buffer: E[g^2] <- rho E[g^2] + (1-rho) g^2,
/// u = sqrt(E[dx^2]+eps)/sqrt(E[g^2]+eps) g, x -= lr u, E[dx^2] <- rho E[dx^2] + (1-rho) u^2.
void adadelta_update(std::span<double> values, std::span<const double> grads, AdaDeltaSlot& slot, double lr,
                     double rho, double eps);

/// Applies adadelta_update to every trainable parameter using its gradient.
/// Checks all gradients first; a non-finite entry throws naming the parameter
/// and leaves every value untouched.
void adadelta_step(AdaDeltaState& state, ParamStore& params, double lr, double rho, double eps);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training loss (with dropout)
  double em = 0.0;    // evaluation-mode scores on the training set
  double f1 = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
};

/// Called after each epoch; returning false ends training early.
using EpochObserver = std::function<bool(const EpochRecord&)>;

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Word/tag tables trained or loaded ahead of the model.
struct PreparedInputs {
  Vocabularies vocab;
  EncoderInit init;
};

/// Trains POS and NER skip-gram tables on the tag sequences of `data` unless
/// given, loads pretrained word vectors when a path is given, and builds the
/// vocabularies.
PreparedInputs prepare_inputs(const TrainConfig& config, const Dataset& data,
                              const std::optional<std::filesystem::path>& word_vectors = std::nullopt,
                              const std::optional<tags::TagEmbeddingTable>& pos_table = std::nullopt,
                              const std::optional<tags::TagEmbeddingTable>& ner_table = std::nullopt);

MemenModel build_model(const TrainConfig& config, const PreparedInputs& inputs);

/// Tag sequences of every passage and question, for skip-gram training.
std::vector<std::vector<std::string>> tag_sequences(const Dataset& data, bool ner);

/// Mini-batch training with the span loss; the batch loss is the mean of its
/// examples' losses. Examples are reshuffled every epoch.
TrainingLog train(const TrainConfig& config, const Dataset& data, MemenModel& model,
                  const EpochObserver& observer = {});

std::vector<AnswerRecord> gold_answers(const Dataset& data);
std::vector<AnswerRecord> predict_answers(const MemenModel& model, const Dataset& data,
                                          std::vector<SpanPrediction>* spans = nullptr);
Scores evaluate_model(const MemenModel& model, const Dataset& data, bool char_level = false);

struct SweepRow {
  std::string label;
  std::size_t hops = 0;
  Scores scores;
  double em_delta = 0.0;
  double f1_delta = 0.0;
  bool baseline = false;
  std::string note;
};

/// One training per hop count with a shared seed. Scores are on `eval` when
/// given, otherwise on the training data.
std::vector<SweepRow> hop_sweep(const TrainConfig& config, const Dataset& data, const std::vector<std::size_t>& hops,
                                const Dataset* eval = nullptr);

/// The full model (baseline) plus one training per ablation switch, with
/// deltas against the baseline.
std::vector<SweepRow> ablation_sweep(const TrainConfig& config, const Dataset& data, const Dataset* eval = nullptr);

std::string hop_sweep_csv(const std::vector<SweepRow>& rows);
std::string ablation_csv(const std::vector<SweepRow>& rows);

struct EnsembleDraw {
  double lr = 0.0;       // raw Gaussian draws, before clamping
  double dropout = 0.0;
  TrainConfig config;    // clamped values, everything else copied from base
};

inline constexpr double kEnsembleLrMean = 0.001;
inline constexpr double kEnsembleLrVariance = 0.0001;
inline constexpr double kEnsembleDropoutMean = 0.2;
inline constexpr double kEnsembleDropoutVariance = 0.05;
inline constexpr double kEnsembleMinLr = 1e-5;
inline constexpr double kEnsembleMaxDropout = 0.5;

/// lr ~ N(0.001, variance 0.0001), dropout ~ N(0.2, variance 0.05); the
/// config gets lr clamped to >= 1e-5 and dropout to [0, 0.5].
EnsembleDraw draw_ensemble_config(const TrainConfig& base, std::uint64_t seed);
TrainConfig sample_ensemble_config(const TrainConfig& base, std::uint64_t seed);

/// Sum-of-confidence vote over member decodes. Each member's argmax span is a
/// candidate; a candidate scores the sum over members of
/// start_dist[start] * end_dist[end]. Highest score wins, ties go to the
/// lexicographically lowest (start, end). The result's distributions are the
/// member averages and its confidence the mean member confidence of the span.
SpanPrediction combine_predictions(const std::vector<SpanPrediction>& members);
SpanPrediction ensemble_predict(const std::vector<const MemenModel*>& models, const TaggedExample& example);

}  // namespace memen
