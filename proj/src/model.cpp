#include "memen/model.hpp"

#include <stdexcept>

namespace memen {

MemenModel::MemenModel(const ModelConfig& config, Vocabularies vocab, const EncoderInit& init, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  if (config_.hops < 1) throw std::invalid_argument("model: hops must be >= 1");
  if (config_.matching.blocks() == 0) {
    throw std::invalid_argument("model: all three matching blocks ablated, nothing to fuse");
  }
  Rng rng(seed);
  encoder_ = make_encoder(params_, config_.encoder, vocab_, init, rng);
  config_.encoder = encoder_.config;
  const auto hidden = config_.encoder.hidden;
  const auto dim = 2 * hidden;
  for (std::size_t k = 0; k < config_.hops; ++k) {
    hops_.push_back(
        make_hop(params_, "hop" + std::to_string(k + 1), dim, hidden, config_.matching, k > 0, rng));
  }
  const auto attention = config_.attention_dim ? config_.attention_dim : hidden;
  pointer_ = make_pointer(params_, "pointer", dim, attention, rng);
}

MemenModel::Pass MemenModel::forward(const TaggedExample& example, const DropoutContext& dropout,
                                     bool with_loss) const {
  Pass pass;
  const Tensor passage_in = dropout.apply(embed_sequence(encoder_, token_ids(vocab_, example.passage)));
  const Tensor question_in = dropout.apply(embed_sequence(encoder_, token_ids(vocab_, example.question)));
  pass.passage = encode_sequence(encoder_, passage_in);
  pass.question = encode_sequence(encoder_, question_in);

  const Tensor passage_reps = dropout.apply(pass.passage.reps);
  const Tensor question_reps = dropout.apply(pass.question.reps);
  pass.hops = run_memory_network(hops_, config_.matching, passage_reps, question_reps, pass.question.last_state,
                                 dropout);
  const Tensor memory = dropout.apply(pass.hops.back().output);
  pass.span = decode_span(pointer_, memory, question_reps, config_.end_not_before_start);
  if (with_loss) pass.loss = span_loss(pass.span.start_dist, pass.span.end_dist, example.answer_start, example.answer_end);
  return pass;
}

SpanPrediction MemenModel::predict(const TaggedExample& example) const {
  NoGradScope no_grad;
  return forward(example, DropoutContext{}, false).span.prediction;
}

}  // namespace memen
