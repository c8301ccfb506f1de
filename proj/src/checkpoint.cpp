#include "advrl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace advrl {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'R', 'L', 'C', 'P', '\x01'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

nlohmann::json layer_to_json(const LayerSpec& layer) {
  if (const auto* c = std::get_if<Conv2D>(&layer))
    return {{"type", "conv"}, {"filters", c->filters}, {"kernel", c->kernel}, {"stride", c->stride}};
  if (const auto* d = std::get_if<Dense>(&layer))
    return {{"type", "dense"}, {"in", d->in}, {"out", d->out}};
  return {{"type", "relu"}};
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv")
    return Conv2D{j.at("filters").get<int>(), j.at("kernel").get<int>(), j.at("stride").get<int>()};
  if (type == "dense") return Dense{j.at("in").get<int>(), j.at("out").get<int>()};
  if (type == "relu") return Relu{};
  throw std::invalid_argument("unknown layer type: " + type);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["input_shape"] = ckpt.net.input_shape;
  header["layers"] = nlohmann::json::array();
  for (const auto& layer : ckpt.net.layers) header["layers"].push_back(layer_to_json(layer));

  const auto names = ckpt.net.param_names();
  if (names.size() != ckpt.net.params.size())
    throw std::logic_error("checkpoint: parameter naming out of sync");
  header["params"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ckpt.net.params.size(); ++i)
    header["params"].push_back({{"name", names[i]}, {"shape", ckpt.net.params[i].shape}});

  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    header["optimizer"] = {{"kind", to_string(o.kind)},   {"learning_rate", o.learning_rate},
                           {"beta1", o.beta1},            {"beta2", o.beta2},
                           {"eps", o.eps},                {"step_count", o.step_count},
                           {"has_state", !o.m.empty()}};
  } else {
    header["optimizer"] = nullptr;
  }
  header["rng_seed"] = ckpt.rng_seed;
  header["meta"] = ckpt.meta;

  const std::string hs = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_u64(os, hs.size());
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  auto write_tensor = [&os](const Tensor& t) {
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  };
  for (const auto& p : ckpt.net.params) write_tensor(p);
  if (ckpt.optimizer && !ckpt.optimizer->m.empty()) {
    for (const auto& t : ckpt.optimizer->m) write_tensor(t);
    for (const auto& t : ckpt.optimizer->v) write_tensor(t);
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic/version): " + path.string());

  const std::uint64_t hlen = read_u64(is);
  std::string hs(hlen, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
  const nlohmann::json header = nlohmann::json::parse(hs);

  Checkpoint ckpt;
  ckpt.net.input_shape = header.at("input_shape").get<std::vector<int>>();
  for (const auto& lj : header.at("layers")) ckpt.net.layers.push_back(layer_from_json(lj));

  auto read_tensor = [&is, &path](const std::vector<int>& shape) {
    Tensor t = Tensor::zeros(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
    return t;
  };

  std::vector<std::vector<int>> shapes;
  for (const auto& pj : header.at("params")) shapes.push_back(pj.at("shape").get<std::vector<int>>());
  for (const auto& s : shapes) ckpt.net.params.push_back(read_tensor(s));

  const auto& oj = header.at("optimizer");
  if (!oj.is_null()) {
    Optimizer o;
    o.kind = optimizer_kind_from_string(oj.at("kind").get<std::string>());
    o.learning_rate = oj.at("learning_rate").get<double>();
    o.beta1 = oj.at("beta1").get<double>();
    o.beta2 = oj.at("beta2").get<double>();
    o.eps = oj.at("eps").get<double>();
    o.step_count = oj.at("step_count").get<long>();
    if (oj.at("has_state").get<bool>()) {
      for (const auto& s : shapes) o.m.push_back(read_tensor(s));
      for (const auto& s : shapes) o.v.push_back(read_tensor(s));
    }
    ckpt.optimizer = std::move(o);
  }
  ckpt.rng_seed = header.at("rng_seed").get<std::uint64_t>();
  if (header.contains("meta"))
    ckpt.meta = header.at("meta").get<std::map<std::string, std::string>>();
  return ckpt;
}

}  // namespace advrl
