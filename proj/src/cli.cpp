#include "memen/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "memen/checkpoint.hpp"
#include "memen/embedding_file.hpp"
#include "memen/trainer.hpp"

namespace memen {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct TrainFlags {
  TrainConfig config;
  std::vector<std::string> ablate;
  std::string train_path;
  std::string dev_path;
  std::string word_vectors;
  std::string pos_vectors;
  std::string ner_vectors;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--train", f.train_path, "Training data (JSON lines)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dev", f.dev_path, "Evaluation data; defaults to the training data")->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", f.word_vectors, "Pretrained word vectors (frozen)")->check(CLI::ExistingFile);
  cmd->add_option("--pos-vectors", f.pos_vectors, "POS tag vectors from train-tags")->check(CLI::ExistingFile);
  cmd->add_option("--ner-vectors", f.ner_vectors, "NER tag vectors from train-tags")->check(CLI::ExistingFile);
  auto& c = f.config;
  cmd->add_option("--hops", c.hops, "Memory hops")->capture_default_str();
  cmd->add_option("--hidden", c.hidden, "LSTM hidden size")->capture_default_str();
  cmd->add_option("--dropout", c.dropout, "Dropout ratio")->capture_default_str();
  cmd->add_option("--lr", c.lr, "AdaDelta learning rate")->capture_default_str();
  cmd->add_option("--rho", c.rho, "AdaDelta decay")->capture_default_str();
  cmd->add_option("--eps", c.eps, "AdaDelta epsilon")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", c.batch, "Examples per update")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--word-dim", c.word_dim, "Word embedding size without pretrained vectors")->capture_default_str();
  cmd->add_option("--char-dim", c.char_dim, "Character embedding size")->capture_default_str();
  cmd->add_option("--tag-dim", c.tag_dim, "Tag embedding size")->capture_default_str();
  cmd->add_option("--tag-epochs", c.tag_epochs, "Skip-gram steps for tag tables")->capture_default_str();
  cmd->add_option("--ablate", f.ablate, "Switch off: integral, query_sim, context_sim, pos_tags, ner_tags, gate")
      ->check(CLI::IsMember(kAblationNames));
  cmd->add_flag("--end-after-start", c.end_not_before_start, "Restrict the end pointer to positions >= start");
}

TrainConfig finalize(TrainFlags& f) {
  try {
    for (const auto& name : f.ablate) f.config.ablations.disable(name);
    f.config.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("config", e.what());
  }
  return f.config;
}

std::optional<tags::TagEmbeddingTable> read_tag_table(const std::string& path) {
  if (path.empty()) return std::nullopt;
  const auto file = read_embedding_file(path);
  tags::TagEmbeddingTable table;
  table.vocab = Vocab(file.tokens);
  table.input_vectors = file.as_matrix();
  table.output_vectors = table.input_vectors;
  return table;
}

PreparedInputs prepare(const TrainFlags& f, const TrainConfig& config, const Dataset& data) {
  std::optional<fs::path> words;
  if (!f.word_vectors.empty()) words = f.word_vectors;
  return prepare_inputs(config, data, words, read_tag_table(f.pos_vectors), read_tag_table(f.ner_vectors));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string scores_line(const Scores& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "EM %.4f F1 %.4f", s.em, s.f1);
  return buf;
}

std::string prediction_line(const TaggedExample& ex, const SpanPrediction& p) {
  ordered_json j;
  j["id"] = ex.id;
  j["answer_text"] = span_text(ex.passage, p.start, p.end);
  j["start"] = p.start;
  j["end"] = p.end;
  j["confidence"] = p.confidence;
  return j.dump();
}

std::vector<AnswerRecord> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<AnswerRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = ordered_json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("answer_text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> parse_hop_list(const std::string& text) {
  std::vector<std::size_t> hops;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 1) throw CLI::ValidationError("--hop-list", "expected positive integers, got '" + text + "'");
    hops.push_back(static_cast<std::size_t>(v));
  }
  if (hops.empty()) throw CLI::ValidationError("--hop-list", "empty hop list");
  return hops;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-hop matching reader for extractive question answering"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for every file the command writes")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic key/value reading dataset");
  SyntheticOptions synth;
  gen->add_option("--seed", synth.seed)->capture_default_str();
  gen->add_option("--examples", synth.n_examples)->capture_default_str();
  gen->add_option("--vocab", synth.vocab_size)->capture_default_str();
  gen->add_option("--min-len", synth.min_passage_len)->capture_default_str();
  gen->add_option("--max-len", synth.max_passage_len)->capture_default_str();
  gen->add_option("--distractors", synth.distractors)->capture_default_str();
  std::string gen_name = "synthetic.jsonl";
  gen->add_option("--name", gen_name, "Output file name inside --out-dir")->capture_default_str();

  // train-tags
  auto* tags_cmd = app.add_subcommand("train-tags", "Train POS and NER skip-gram tables on a tagged corpus");
  std::string corpus_path;
  tags::SkipGramOptions sg;
  tags_cmd->add_option("--corpus", corpus_path, "Tagged data (JSON lines)")->required()->check(CLI::ExistingFile);
  tags_cmd->add_option("--dim", sg.dim)->capture_default_str();
  tags_cmd->add_option("--window", sg.window)->capture_default_str();
  tags_cmd->add_option("--epochs", sg.epochs)->capture_default_str();
  tags_cmd->add_option("--lr", sg.learning_rate)->capture_default_str();
  tags_cmd->add_option("--seed", sg.seed)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes model.ckpt and train_log.csv");
  TrainFlags train_flags;
  add_train_flags(train_cmd, train_flags);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions or a checkpoint against gold answers");
  std::string eval_data, eval_preds, eval_ckpt;
  bool char_f1 = false;
  eval_cmd->add_option("--data", eval_data, "Gold data (JSON lines)")->required()->check(CLI::ExistingFile);
  auto* preds_opt =
      eval_cmd->add_option("--predictions", eval_preds, "Predictions (JSON lines)")->check(CLI::ExistingFile);
  auto* ckpt_opt = eval_cmd->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->check(CLI::ExistingFile);
  preds_opt->excludes(ckpt_opt);
  eval_cmd->add_flag("--char-f1", char_f1, "Character-level F1");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Write predictions.jsonl for a dataset");
  std::string predict_data, predict_ckpt;
  predict_cmd->add_option("--data", predict_data)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--checkpoint", predict_ckpt)->required()->check(CLI::ExistingFile);

  // hop-sweep
  auto* sweep_cmd = app.add_subcommand("hop-sweep", "Train one model per hop count; writes hop_sweep.csv");
  TrainFlags sweep_flags;
  add_train_flags(sweep_cmd, sweep_flags);
  std::string hop_list = "1,2,3,4";
  sweep_cmd->add_option("--hop-list", hop_list)->capture_default_str();

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Full model plus one run per ablation; writes ablation.csv");
  TrainFlags ablate_flags;
  add_train_flags(ablate_cmd, ablate_flags);

  // ensemble
  auto* ens_cmd = app.add_subcommand("ensemble", "Train sampled members and score their combination");
  TrainFlags ens_flags;
  add_train_flags(ens_cmd, ens_flags);
  std::size_t members = 14;
  ens_cmd->add_option("--members", members)->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (e.get_exit_code() == 0) return kExitOk;
    err << app.help();
    return kExitUsage;
  }

  try {
    const fs::path dir(out_dir);
    auto ensure_dir = [&] { fs::create_directories(dir); };

    if (*gen) {
      auto data = generate_synthetic(synth);
      ensure_dir();
      save_dataset(dir / gen_name, data);
      out << "wrote " << data.examples.size() << " examples to " << (dir / gen_name).string() << "\n";
    } else if (*tags_cmd) {
      const auto data = load_dataset(corpus_path);
      ensure_dir();
      for (const bool ner : {false, true}) {
        const auto corpus = tags::build_corpus(tag_sequences(data, ner));
        tags::SkipGramOptions options = sg;
        if (ner) options.seed = sg.seed + 1;
        const auto table = tags::train_skipgram(corpus, options);
        const auto file = dir / (ner ? "ner_tags.vec" : "pos_tags.vec");
        write_embedding_file(file, table.vocab.tokens(), table.input_vectors);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s average log prob %.6f\n", ner ? "ner" : "pos",
                      tags::average_log_prob(table, corpus, options.window));
        out << buf;
      }
    } else if (*train_cmd) {
      const auto config = finalize(train_flags);
      const auto data = load_dataset(train_flags.train_path);
      const auto inputs = prepare(train_flags, config, data);
      auto model = build_model(config, inputs);
      ensure_dir();
      const auto log = train(config, data, model, [&](const EpochRecord& r) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f EM %.4f F1 %.4f\n", r.epoch, r.loss, r.em, r.f1);
        out << buf << std::flush;
        return true;
      });
      save_checkpoint(dir / "model.ckpt", model, config);
      write_text(dir / "train_log.csv", log.to_csv());
      if (!train_flags.dev_path.empty()) {
        out << "dev " << scores_line(evaluate_model(model, load_dataset(train_flags.dev_path, Split::kDev))) << "\n";
      }
    } else if (*eval_cmd) {
      const auto gold = load_dataset(eval_data, Split::kDev);
      std::vector<AnswerRecord> preds;
      if (!eval_preds.empty()) {
        preds = read_predictions(eval_preds);
      } else if (!eval_ckpt.empty()) {
        const auto loaded = load_checkpoint(eval_ckpt);
        preds = predict_answers(loaded.model, gold);
      } else {
        err << "eval: one of --predictions or --checkpoint is required\n" << eval_cmd->help();
        return kExitUsage;
      }
      out << scores_line(evaluate(preds, gold_answers(gold), char_f1)) << "\n";
    } else if (*predict_cmd) {
      const auto data = load_dataset(predict_data, Split::kTest);
      const auto loaded = load_checkpoint(predict_ckpt);
      std::string text;
      for (const auto& ex : data.examples) text += prediction_line(ex, loaded.model.predict(ex)) + "\n";
      ensure_dir();
      write_text(dir / "predictions.jsonl", text);
      out << "wrote " << data.examples.size() << " predictions to " << (dir / "predictions.jsonl").string() << "\n";
    } else if (*sweep_cmd) {
      const auto config = finalize(sweep_flags);
      const auto hops = parse_hop_list(hop_list);
      const auto data = load_dataset(sweep_flags.train_path);
      std::optional<Dataset> dev;
      if (!sweep_flags.dev_path.empty()) dev = load_dataset(sweep_flags.dev_path, Split::kDev);
      const auto rows = hop_sweep(config, data, hops, dev ? &*dev : nullptr);
      ensure_dir();
      write_text(dir / "hop_sweep.csv", hop_sweep_csv(rows));
      out << hop_sweep_csv(rows);
    } else if (*ablate_cmd) {
      const auto config = finalize(ablate_flags);
      const auto data = load_dataset(ablate_flags.train_path);
      std::optional<Dataset> dev;
      if (!ablate_flags.dev_path.empty()) dev = load_dataset(ablate_flags.dev_path, Split::kDev);
      const auto rows = ablation_sweep(config, data, dev ? &*dev : nullptr);
      ensure_dir();
      write_text(dir / "ablation.csv", ablation_csv(rows));
      out << ablation_csv(rows);
    } else if (*ens_cmd) {
      const auto base = finalize(ens_flags);
      const auto data = load_dataset(ens_flags.train_path);
      const Dataset eval = ens_flags.dev_path.empty() ? data : load_dataset(ens_flags.dev_path, Split::kDev);
      std::vector<MemenModel> trained;
      std::string table = "member,seed,lr,dropout,em,f1\n";
      for (std::size_t k = 0; k < members; ++k) {
        const auto seed = base.seed + k;
        const auto config = sample_ensemble_config(base, seed);
        const auto inputs = prepare(ens_flags, config, data);
        auto model = build_model(config, inputs);
        train(config, data, model);
        const auto s = evaluate_model(model, eval);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%llu,%.8f,%.8f,%.6f,%.6f\n", k + 1, static_cast<unsigned long long>(seed),
                      config.lr, config.dropout, s.em, s.f1);
        table += buf;
        trained.push_back(std::move(model));
      }
      std::vector<const MemenModel*> ptrs;
      for (const auto& m : trained) ptrs.push_back(&m);
      std::string lines;
      std::vector<AnswerRecord> preds;
      for (const auto& ex : eval.examples) {
        const auto p = ensemble_predict(ptrs, ex);
        lines += prediction_line(ex, p) + "\n";
        preds.push_back({ex.id, span_text(ex.passage, p.start, p.end)});
      }
      ensure_dir();
      write_text(dir / "ensemble_members.csv", table);
      write_text(dir / "ensemble_predictions.jsonl", lines);
      out << table << "ensemble " << scores_line(evaluate(preds, gold_answers(eval))) << "\n";
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace memen
