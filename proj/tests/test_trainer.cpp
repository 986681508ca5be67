#include <gtest/gtest.h>

#include <cmath>

#include "memen/trainer.hpp"
#include "oracles.hpp"

using namespace memen;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.hops = 2;
  c.hidden = 4;
  c.word_dim = 5;
  c.char_dim = 2;
  c.tag_dim = 3;
  c.tag_epochs = 5;
  c.epochs = 2;
  c.batch = 2;
  c.seed = 9;
  return c;
}

Dataset tiny_data(std::size_t n = 6) { return generate_synthetic({.seed = 2, .n_examples = n}); }

double eval_loss(const MemenModel& model, const TaggedExample& ex) {
  NoGradScope off;
  return model.forward(ex, {}, true).loss.item();
}

}  // namespace

TEST(AdaDelta, FirstStepClosedForm) {
  AdaDeltaSlot slot;
  std::vector<double> x{0.0};
  const std::vector<double> g{1.0};
  adadelta_update(x, g, slot, 1.0, 0.95, 1e-6);
  EXPECT_NEAR(x[0], -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6), 1e-15);
  EXPECT_NEAR(x[0], -4.4721e-3, 1e-7);
  EXPECT_NEAR(slot.grad_sq[0], 0.05, 1e-15);
}

TEST(AdaDelta, MatchesLoopOracleOverSteps) {
  Rng rng(4);
  std::vector<double> x(5), oracle_x(5);
  for (std::size_t i = 0; i < 5; ++i) oracle_x[i] = x[i] = rng.uniform(-1, 1);
  std::vector<double> eg(5, 0.0), eu(5, 0.0);
  AdaDeltaSlot slot;
  const double lr = 0.3, rho = 0.9, eps = 1e-4;
  for (int step = 0; step < 20; ++step) {
    std::vector<double> g(5);
    for (auto& v : g) v = rng.uniform(-2, 2);
    adadelta_update(x, g, slot, lr, rho, eps);
    for (std::size_t i = 0; i < 5; ++i) {
      eg[i] = rho * eg[i] + (1 - rho) * g[i] * g[i];
      const double delta = -std::sqrt(eu[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
      oracle_x[i] += lr * delta;
      eu[i] = rho * eu[i] + (1 - rho) * delta * delta;
    }
  }
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(x[i], oracle_x[i], 1e-14);
    EXPECT_GE(slot.grad_sq[i], 0.0);
    EXPECT_GE(slot.update_sq[i], 0.0);
  }
}

TEST(AdaDelta, ZeroGradientOrZeroRateLeavesValues) {
  AdaDeltaSlot slot;
  std::vector<double> x{0.5, -2.0};
  adadelta_update(x, std::vector<double>{0.0, 0.0}, slot, 1.0, 0.95, 1e-6);
  EXPECT_EQ(x, (std::vector<double>{0.5, -2.0}));
  adadelta_update(x, std::vector<double>{3.0, -1.0}, slot, 0.0, 0.95, 1e-6);
  EXPECT_EQ(x, (std::vector<double>{0.5, -2.0}));
  EXPECT_THROW(adadelta_update(x, std::vector<double>{1.0}, slot, 1.0, 0.95, 1e-6), ShapeError);
}

TEST(AdaDelta, NonFiniteGradientNamesParameterAndAborts) {
  ParamStore store;
  Tensor a = store.add("layer.a", Tensor::row({1.0, 2.0}));
  Tensor b = store.add("layer.b", Tensor::row({3.0}));
  a.grad_buffer()[0] = 0.5;
  b.grad_buffer()[0] = std::nan("");
  AdaDeltaState state;
  try {
    adadelta_step(state, store, 1.0, 0.95, 1e-6);
    FAIL();
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("layer.b"), std::string::npos) << e.what();
  }
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_TRUE(state.slots.empty());
}

TEST(AdaDelta, FrozenParametersNeverMove) {
  ParamStore store;
  Tensor frozen = store.add("frozen", Tensor::row({1.0}), false);
  frozen.grad_buffer()[0] = 1.0;
  AdaDeltaState state;
  adadelta_step(state, store, 1.0, 0.95, 1e-6);
  EXPECT_DOUBLE_EQ(frozen[0], 1.0);
}

TEST(TrainConfig, DefaultsFollowPaperSettings) {
  const TrainConfig c;
  EXPECT_EQ(c.hidden, 100u);
  EXPECT_EQ(c.hops, 3u);
  EXPECT_DOUBLE_EQ(c.dropout, 0.2);
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_EQ(c.tag_window, 2u);
  EXPECT_DOUBLE_EQ(c.rho, 0.95);
  EXPECT_DOUBLE_EQ(c.eps, 1e-6);
}

TEST(TrainConfig, ValidationRejectsBadValues) {
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.hops = 0; });
  bad([](TrainConfig& c) { c.dropout = 1.0; });
  bad([](TrainConfig& c) { c.dropout = -0.1; });
  bad([](TrainConfig& c) { c.batch = 0; });
  bad([](TrainConfig& c) {
    c.ablations.disable("integral");
    c.ablations.disable("query_sim");
    c.ablations.disable("context_sim");
  });
  Ablations a;
  EXPECT_THROW(a.disable("attention"), std::invalid_argument);
}

TEST(Train, DropoutZeroEqualsEvalMode) {
  auto config = tiny_config();
  const auto data = tiny_data();
  const auto model = build_model(config, prepare_inputs(config, data));
  Rng rng(1);
  const DropoutContext zero{0.0, &rng};
  NoGradScope off;
  const auto a = model.forward(data.examples[0], zero, true);
  const auto b = model.forward(data.examples[0], {}, true);
  EXPECT_EQ(a.loss.item(), b.loss.item());
  EXPECT_EQ(a.span.prediction.start_dist, b.span.prediction.start_dist);
}

TEST(Train, OverfitsSingleExample) {
  auto config = tiny_config();
  config.batch = 1;
  config.epochs = 60;
  config.dropout = 0.0;
  Dataset one = tiny_data(1);
  auto model = build_model(config, prepare_inputs(config, one));
  const double before = eval_loss(model, one.examples[0]);
  const auto log = train(config, one, model);
  ASSERT_EQ(log.epochs.size(), 60u);
  EXPECT_LT(eval_loss(model, one.examples[0]), before);
  EXPECT_LT(log.epochs.back().loss, log.epochs.front().loss);
}

TEST(Train, BitReproducible) {
  const auto config = tiny_config();
  const auto data = tiny_data();
  auto run = [&] {
    auto model = build_model(config, prepare_inputs(config, data));
    const auto log = train(config, data, model);
    std::vector<double> values;
    for (const auto& [name, slot] : model.params().slots())
      values.insert(values.end(), slot.value.data().begin(), slot.value.data().end());
    return std::make_pair(values, log.to_csv());
  };
  const auto first = run();
  const auto second = run();
  EXPECT_EQ(first.first, second.first);
  EXPECT_EQ(first.second, second.second);
}

TEST(Train, ObserverStopsEarlyAndLogFormats) {
  auto config = tiny_config();
  config.epochs = 5;
  const auto data = tiny_data();
  auto model = build_model(config, prepare_inputs(config, data));
  std::size_t seen = 0;
  const auto log = train(config, data, model, [&](const EpochRecord& r) {
    ++seen;
    EXPECT_EQ(r.epoch, seen);
    return r.epoch < 2;
  });
  EXPECT_EQ(seen, 2u);
  const auto csv = log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,loss,em,f1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(train(config, Dataset{}, model), std::invalid_argument);
}

TEST(Sweeps, HopAndAblationTables) {
  auto config = tiny_config();
  config.epochs = 1;
  const auto data = tiny_data(3);
  const auto one = hop_sweep(config, data, {1});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].hops, 1u);
  EXPECT_THROW(hop_sweep(config, data, {}), std::invalid_argument);

  const auto rows = ablation_sweep(config, data);
  ASSERT_EQ(rows.size(), 1 + kAblationNames.size());
  EXPECT_TRUE(rows[0].baseline);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_FALSE(rows[i].baseline);
    EXPECT_DOUBLE_EQ(rows[i].em_delta, rows[i].scores.em - rows[0].scores.em);
  }
  const auto csv = ablation_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "ablation,baseline,em,f1,em_delta,f1_delta,note");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(rows.size() + 1));
}

TEST(Ensemble, SamplerIsSeededAndCopiesOtherFields) {
  TrainConfig base = tiny_config();
  const auto a = draw_ensemble_config(base, 77);
  const auto b = draw_ensemble_config(base, 77);
  EXPECT_EQ(a.lr, b.lr);
  EXPECT_EQ(a.dropout, b.dropout);
  EXPECT_EQ(a.config.hidden, base.hidden);
  EXPECT_EQ(a.config.hops, base.hops);
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto c = sample_ensemble_config(base, s);
    EXPECT_GT(c.lr, 0.0);
    EXPECT_GE(c.dropout, 0.0);
    EXPECT_LE(c.dropout, 0.5);
  }
}

TEST(Ensemble, DrawMeansMatchGaussians) {
  const int n = 10000;
  double lr = 0, dropout = 0;
  for (int s = 0; s < n; ++s) {
    const auto d = draw_ensemble_config({}, static_cast<std::uint64_t>(s));
    lr += d.lr;
    dropout += d.dropout;
  }
  EXPECT_NEAR(lr / n, 0.001, 3 * std::sqrt(0.0001) / std::sqrt(n));
  EXPECT_NEAR(dropout / n, 0.2, 3 * std::sqrt(0.05) / std::sqrt(n));
}

TEST(Ensemble, SingleMemberIsIdentity) {
  SpanPrediction p;
  p.start_dist = {0.1, 0.7, 0.2};
  p.end_dist = {0.1, 0.2, 0.7};
  p.start = 2;
  p.end = 3;
  p.confidence = 0.49;
  const auto out = combine_predictions({p});
  EXPECT_EQ(out.start, 2);
  EXPECT_EQ(out.end, 3);
  EXPECT_DOUBLE_EQ(out.confidence, 0.49);
}

TEST(Ensemble, TwoAgreeingBeatStrongDissenter) {
  auto member = [](std::vector<double> s, std::vector<double> e) {
    SpanPrediction p;
    p.start_dist = s;
    p.end_dist = e;
    p.start = static_cast<int>(argmax_first(s)) + 1;
    p.end = static_cast<int>(argmax_first(e)) + 1;
    p.confidence = s[p.start - 1] * e[p.end - 1];
    return p;
  };
  // Members 1 and 2 pick (1,2) with 0.5*0.5 each; member 3 picks (3,3) at 0.9*0.9 but
  // gives (1,2) nothing. Sums: (1,2) = 0.25 + 0.25 + 0.0 vs (3,3) = 0.1*0.1*2 + 0.81.
  const auto a = member({0.5, 0.1, 0.4}, {0.1, 0.5, 0.4});
  const auto b = member({0.5, 0.4, 0.1}, {0.4, 0.5, 0.1});
  const auto c = member({0.0, 0.1, 0.9}, {0.1, 0.0, 0.9});
  const auto out = combine_predictions({a, b, c});
  const auto want = oracle::ensemble_choice({a.start_dist, b.start_dist, c.start_dist},
                                            {a.end_dist, b.end_dist, c.end_dist},
                                            {{a.start, a.end}, {b.start, b.end}, {c.start, c.end}});
  EXPECT_EQ(std::make_pair(out.start, out.end), want);
  // Without the third member's big mass the pair wins outright.
  const auto weak = member({0.2, 0.3, 0.5}, {0.3, 0.2, 0.5});
  const auto pair_wins = combine_predictions({a, b, weak});
  EXPECT_EQ(pair_wins.start, 1);
  EXPECT_EQ(pair_wins.end, 2);
}

TEST(Ensemble, RandomCasesMatchBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(5);
    std::vector<SpanPrediction> members(3);
    std::vector<std::vector<double>> starts, ends;
    std::vector<std::pair<int, int>> proposals;
    for (auto& m : members) {
      std::vector<double> s(n), e(n);
      for (auto& v : s) v = rng.uniform(0, 1);
      for (auto& v : e) v = rng.uniform(0, 1);
      m.start_dist = oracle::softmax(s);
      m.end_dist = oracle::softmax(e);
      m.start = static_cast<int>(argmax_first(m.start_dist)) + 1;
      m.end = static_cast<int>(argmax_first(m.end_dist)) + 1;
      m.confidence = m.start_dist[m.start - 1] * m.end_dist[m.end - 1];
      starts.push_back(m.start_dist);
      ends.push_back(m.end_dist);
      proposals.emplace_back(m.start, m.end);
    }
    const auto out = combine_predictions(members);
    EXPECT_EQ(std::make_pair(out.start, out.end), oracle::ensemble_choice(starts, ends, proposals));
  }
}

TEST(Ensemble, PredictWithOneModelMatchesDecode) {
  const auto config = tiny_config();
  const auto data = tiny_data(2);
  const auto model = build_model(config, prepare_inputs(config, data));
  const auto single = model.predict(data.examples[1]);
  const auto viaEnsemble = ensemble_predict({&model}, data.examples[1]);
  EXPECT_EQ(single.start, viaEnsemble.start);
  EXPECT_EQ(single.end, viaEnsemble.end);
  EXPECT_EQ(single.confidence, viaEnsemble.confidence);
}

TEST(Evaluate, GoldAgainstItselfIsPerfect) {
  const auto data = tiny_data(20);
  const auto golds = gold_answers(data);
  const auto s = evaluate(golds, golds);
  EXPECT_DOUBLE_EQ(s.em, 1.0);
  EXPECT_DOUBLE_EQ(s.f1, 1.0);
}
