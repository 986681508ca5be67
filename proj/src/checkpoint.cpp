#include "memen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include "json.hpp"

namespace memen {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::ordered_json;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw CheckpointError(path.string() + ": truncated checkpoint");
  }
  return value;
}

std::string take_bytes(std::istream& in, std::size_t n, const std::filesystem::path& path) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw CheckpointError(path.string() + ": truncated checkpoint");
  }
  return s;
}

ordered_json config_json(const TrainConfig& c, const MemenModel& model) {
  ordered_json j;
  j["hops"] = c.hops;
  j["hidden"] = c.hidden;
  j["dropout"] = c.dropout;
  j["lr"] = c.lr;
  j["rho"] = c.rho;
  j["eps"] = c.eps;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["seed"] = c.seed;
  j["ablations"] = c.ablations.disabled();
  j["word_dim"] = model.config().encoder.word_dim;
  j["char_dim"] = c.char_dim;
  j["tag_dim"] = c.tag_dim;
  j["tag_window"] = c.tag_window;
  j["tag_epochs"] = c.tag_epochs;
  j["end_not_before_start"] = c.end_not_before_start;
  const auto& enc = model.encoder();
  j["pos_dim"] = enc.config.use_pos ? enc.pos_table.cols() : c.tag_dim;
  j["ner_dim"] = enc.config.use_ner ? enc.ner_table.cols() : c.tag_dim;
  return j;
}

TrainConfig config_from_json(const ordered_json& j) {
  TrainConfig c;
  c.hops = j.at("hops").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.lr = j.at("lr").get<double>();
  c.rho = j.at("rho").get<double>();
  c.eps = j.at("eps").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& name : j.at("ablations")) c.ablations.disable(name.get<std::string>());
  c.word_dim = j.at("word_dim").get<std::size_t>();
  c.char_dim = j.at("char_dim").get<std::size_t>();
  c.tag_dim = j.at("tag_dim").get<std::size_t>();
  c.tag_window = j.at("tag_window").get<std::size_t>();
  c.tag_epochs = j.at("tag_epochs").get<std::size_t>();
  c.end_not_before_start = j.at("end_not_before_start").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MemenModel& model, const TrainConfig& config) {
  ordered_json meta;
  meta["config"] = config_json(config, model);
  const auto& v = model.vocab();
  meta["vocab"] = {{"words", v.words.tokens()}, {"chars", v.chars.tokens()}, {"pos", v.pos.tokens()},
                   {"ner", v.ner.tokens()}};
  const std::string text = meta.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const auto& slots = model.params().slots();
  put<std::uint64_t>(out, slots.size());
  for (const auto& [name, slot] : slots) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, slot.trainable ? 1 : 0);
    put<std::uint64_t>(out, slot.value.rows());
    put<std::uint64_t>(out, slot.value.cols());
    const auto data = slot.value.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string magic = take_bytes(in, sizeof kCheckpointMagic, path);
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto meta_len = take<std::uint64_t>(in, path);
  ordered_json meta;
  try {
    meta = ordered_json::parse(take_bytes(in, meta_len, path));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": bad metadata: " + e.what());
  }

  TrainConfig config;
  Vocabularies vocab;
  std::size_t pos_dim = 0;
  std::size_t ner_dim = 0;
  try {
    config = config_from_json(meta.at("config"));
    pos_dim = meta.at("config").at("pos_dim").get<std::size_t>();
    ner_dim = meta.at("config").at("ner_dim").get<std::size_t>();
    const auto& v = meta.at("vocab");
    vocab.words = Vocab(v.at("words").get<std::vector<std::string>>());
    vocab.chars = Vocab(v.at("chars").get<std::vector<std::string>>());
    vocab.pos = Vocab(v.at("pos").get<std::vector<std::string>>());
    vocab.ner = Vocab(v.at("ner").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": bad metadata: " + e.what());
  }
  if (vocab.pos.size() == 0 || vocab.ner.size() == 0) throw CheckpointError(path.string() + ": empty tag vocabulary");

  EncoderInit init;
  init.pos_vectors = Tensor::zeros({vocab.pos.size() - 1, pos_dim});
  init.ner_vectors = Tensor::zeros({vocab.ner.size() - 1, ner_dim});
  MemenModel model(model_config(config), vocab, init, 0);

  ParamStore& params = model.params();
  const auto count = take<std::uint64_t>(in, path);
  if (count != params.slots().size()) {
    throw CheckpointError(path.string() + ": " + std::to_string(count) + " parameters stored, model has " +
                          std::to_string(params.slots().size()));
  }
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name = take_bytes(in, take<std::uint32_t>(in, path), path);
    const bool trainable = take<std::uint8_t>(in, path) != 0;
    const auto rows = take<std::uint64_t>(in, path);
    const auto cols = take<std::uint64_t>(in, path);
    if (!params.contains(name)) throw CheckpointError(path.string() + ": unexpected parameter '" + name + "'");
    const Tensor target = params.get(name);
    if (target.rows() != rows || target.cols() != cols) {
      throw CheckpointError(path.string() + ": parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", model expects " + shape_to_string(target.shape()));
    }
    std::vector<double> values(rows * cols);
    const auto bytes = take_bytes(in, values.size() * sizeof(double), path);
    std::memcpy(values.data(), bytes.data(), bytes.size());
    params.assign(name, Tensor({rows, cols}, std::move(values)));
    params.set_trainable(name, trainable);
  }
  return LoadedCheckpoint{config, std::move(model)};
}

}  // namespace memen
