#pragma once

#include <cstdint>
#include <vector>

#include "memen/dataset.hpp"
#include "memen/encoder.hpp"
#include "memen/memory_net.hpp"
#include "memen/ops.hpp"
#include "memen/pointer.hpp"

namespace memen {

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t hops = 3;
  MatchingSwitches matching;
  /// Width of the pointer attention layers; 0 means the encoder hidden size.
  std::size_t attention_dim = 0;
  bool end_not_before_start = false;
};

/// Encoder, memory hops and pointer decoder wired together.
///
/// Dropout (training passes only) is applied to the embedding
/// concatenations, to the encoder outputs, between hops, and to the final
/// hop output before decoding.
class MemenModel {
 public:
  MemenModel(const ModelConfig& config, Vocabularies vocab, const EncoderInit& init, std::uint64_t seed);

  MemenModel(const MemenModel&) = delete;
  MemenModel& operator=(const MemenModel&) = delete;
  MemenModel(MemenModel&&) = default;
  MemenModel& operator=(MemenModel&&) = default;

  struct Pass {
    EncodedSequence passage;
    EncodedSequence question;
    std::vector<HopOutput> hops;
    DecodedSpan span;
    Tensor loss;  // defined when requested
  };

  Pass forward(const TaggedExample& example, const DropoutContext& dropout, bool with_loss) const;
  /// Evaluation-mode decode without recording.
  SpanPrediction predict(const TaggedExample& example) const;

  const ModelConfig& config() const { return config_; }
  const Vocabularies& vocab() const { return vocab_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }
  const EncoderParams& encoder() const { return encoder_; }
  const std::vector<HopParams>& hops() const { return hops_; }
  const PointerParams& pointer() const { return pointer_; }

 private:
  ModelConfig config_;
  Vocabularies vocab_;
  ParamStore params_;
  EncoderParams encoder_;
  std::vector<HopParams> hops_;
  PointerParams pointer_;
};

}  // namespace memen
