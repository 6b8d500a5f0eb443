#include "hifd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "hifd/errors.hpp"

namespace hifd {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'H', 'I', 'F', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  f.write(buf, 4);
}

std::uint32_t get_u32(std::ifstream& f) {
  char buf[4];
  f.read(buf, 4);
  if (!f) throw IoError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void put_f64_block(std::ofstream& f, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(data[i]);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      f.write(buf, 8);
    }
  }
}

void get_f64_block(std::ifstream& f, double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      char buf[8];
      f.read(buf, 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
      data[i] = std::bit_cast<double>(bits);
    }
  }
  if (!f) throw IoError("checkpoint payload truncated");
}

json conic_to_json(const ellipse::Conic& c) {
  return json::array({c.coeffs[0], c.coeffs[1], c.coeffs[2], c.coeffs[3], c.coeffs[4]});
}

ellipse::Conic conic_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw IoError("trajectory must have five coefficients");
  ellipse::Conic c;
  for (std::size_t i = 0; i < 5; ++i) c.coeffs[i] = j[i].get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  json header;
  header["tool"] = "hifd/1.0.0";
  header["kind"] = detector_name(c.kind);
  header["node"] = c.node;
  header["input_len"] = c.input_len;
  header["seed"] = c.seed;
  header["config_hash"] = c.config_fingerprint;
  header["reg_weight"] = c.reg_weight;
  header["epsilon_bar"] = c.epsilon_bar;
  header["max_train_error"] = c.max_train_error;
  header["trajectory"] = conic_to_json(c.trajectory);

  std::vector<const double*> blocks;
  std::vector<std::size_t> block_sizes;
  switch (c.kind) {
    case DetectorKind::Picae:
    case DetectorKind::Ae: {
      if (!c.model) throw ParameterError("reconstruction checkpoint carries no model");
      c.model->check_consistent();
      json specs = json::array();
      for (const auto& s : c.model->specs)
        specs.push_back({{"in_ch", s.in_ch},
                         {"out_ch", s.out_ch},
                         {"kernel", s.kernel},
                         {"stride", s.stride},
                         {"transposed", s.transposed},
                         {"relu", s.relu}});
      header["model"] = {{"input_len", c.model->input_len},
                         {"specs", specs},
                         {"bounds", c.model->bounds},
                         {"param_count", c.model->params.size()}};
      blocks.push_back(c.model->params.data());
      block_sizes.push_back(c.model->params.size());
      break;
    }
    case DetectorKind::Pca: {
      if (!c.pca) throw ParameterError("subspace checkpoint carries no model");
      header["model"] = {{"input_len", c.pca->input_len},
                         {"rank", c.pca->rank},
                         {"singular_count", c.pca->singular.size()}};
      blocks = {c.pca->mean.data(), c.pca->basis.data(), c.pca->singular.data()};
      block_sizes = {c.pca->mean.size(), c.pca->basis.size(), c.pca->singular.size()};
      break;
    }
    case DetectorKind::Er:
      header["model"] = json::object();
      break;
  }

  const std::string head = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(kMagic, 8);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(head.size()));
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (std::size_t i = 0; i < blocks.size(); ++i) put_f64_block(f, blocks[i], block_sizes[i]);
  if (!f.flush()) throw IoError("short write on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) throw IoError(path + " is not a checkpoint");
  const std::uint32_t version = get_u32(f);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t head_len = get_u32(f);
  std::string head(head_len, '\0');
  f.read(head.data(), head_len);
  if (!f) throw IoError("checkpoint header truncated");

  try {
    const json header = json::parse(head);
    Checkpoint c;
    c.kind = detector_from_name(header.at("kind").get<std::string>());
    c.node = header.at("node").get<NodeId>();
    c.input_len = header.at("input_len").get<std::size_t>();
    c.seed = header.at("seed").get<std::uint64_t>();
    c.config_fingerprint = header.at("config_hash").get<std::uint64_t>();
    c.reg_weight = header.at("reg_weight").get<double>();
    c.epsilon_bar = header.at("epsilon_bar").get<double>();
    c.max_train_error = header.at("max_train_error").get<double>();
    c.trajectory = conic_from_json(header.at("trajectory"));

    const json& jm = header.at("model");
    switch (c.kind) {
      case DetectorKind::Picae:
      case DetectorKind::Ae: {
        cae::Model m;
        m.input_len = jm.at("input_len").get<std::size_t>();
        for (const json& js : jm.at("specs")) {
          cae::LayerSpec s;
          s.in_ch = js.at("in_ch").get<std::size_t>();
          s.out_ch = js.at("out_ch").get<std::size_t>();
          s.kernel = js.at("kernel").get<std::size_t>();
          s.stride = js.at("stride").get<std::size_t>();
          s.transposed = js.at("transposed").get<bool>();
          s.relu = js.at("relu").get<bool>();
          m.specs.push_back(s);
        }
        m.bounds = jm.at("bounds").get<std::vector<std::size_t>>();
        m.params.resize(jm.at("param_count").get<std::size_t>());
        get_f64_block(f, m.params.data(), m.params.size());
        m.check_consistent();
        c.model = std::move(m);
        break;
      }
      case DetectorKind::Pca: {
        PcaModel p;
        p.input_len = jm.at("input_len").get<std::size_t>();
        p.rank = jm.at("rank").get<std::size_t>();
        p.mean.resize(p.input_len);
        p.basis.resize(p.rank * p.input_len);
        p.singular.resize(jm.at("singular_count").get<std::size_t>());
        get_f64_block(f, p.mean.data(), p.mean.size());
        get_f64_block(f, p.basis.data(), p.basis.size());
        get_f64_block(f, p.singular.data(), p.singular.size());
        c.pca = std::move(p);
        break;
      }
      case DetectorKind::Er:
        break;
    }
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint header failure: ") + e.what());
  }
}

std::shared_ptr<const Scorer> scorer_from_checkpoint(const Checkpoint& c) {
  switch (c.kind) {
    case DetectorKind::Picae:
    case DetectorKind::Ae:
      if (!c.model) throw ParameterError("reconstruction checkpoint carries no model");
      return std::make_shared<CaeScorer>(*c.model, c.kind);
    case DetectorKind::Pca:
      if (!c.pca) throw ParameterError("subspace checkpoint carries no model");
      return std::make_shared<PcaScorer>(*c.pca);
    case DetectorKind::Er: {
      ErModel m;
      m.trajectory = c.trajectory;
      m.input_len = c.input_len;
      return std::make_shared<ErScorer>(std::move(m));
    }
  }
  throw ParameterError("unknown detector kind");
}

void save_detector_state(const std::string& path, const StateFile& sf) {
  sf.state.validate();
  json j;
  j["tool"] = "hifd/1.0.0";
  j["kind"] = detector_name(sf.kind);
  j["node"] = sf.state.node;
  j["seed"] = sf.seed;
  j["config_hash"] = sf.config_fingerprint;
  j["checkpoint"] = sf.checkpoint_path;
  j["mean_train_error"] = sf.state.mean_train_error;
  j["lower_threshold"] = sf.state.lower_threshold;
  j["upper_threshold"] = sf.state.upper_threshold;
  j["safety"] = sf.safety;
  j["margin"] = sf.margin;
  j["trajectory"] = conic_to_json(sf.state.trajectory);

  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
  if (!f.flush()) throw IoError("short write on " + path);
}

StateFile load_detector_state(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw IoError(std::string("state file parse failure: ") + e.what());
  }
  try {
    StateFile sf;
    sf.kind = detector_from_name(j.at("kind").get<std::string>());
    sf.seed = j.at("seed").get<std::uint64_t>();
    sf.config_fingerprint = j.at("config_hash").get<std::uint64_t>();
    sf.checkpoint_path = j.at("checkpoint").get<std::string>();
    sf.safety = j.at("safety").get<double>();
    sf.margin = j.at("margin").get<double>();

    std::filesystem::path ck(sf.checkpoint_path);
    if (ck.is_relative()) ck = std::filesystem::path(path).parent_path() / ck;
    const Checkpoint c = load_checkpoint(ck.string());

    sf.state.node = j.at("node").get<NodeId>();
    sf.state.scorer = scorer_from_checkpoint(c);
    sf.state.mean_train_error = j.at("mean_train_error").get<double>();
    sf.state.lower_threshold = j.at("lower_threshold").get<double>();
    sf.state.upper_threshold = j.at("upper_threshold").get<double>();
    sf.state.trajectory = conic_from_json(j.at("trajectory"));
    sf.state.validate();
    return sf;
  } catch (const json::exception& e) {
    throw IoError(std::string("state file field failure: ") + e.what());
  }
}

}  // namespace hifd
