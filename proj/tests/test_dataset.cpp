#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hifd/dataset.hpp"
#include "hifd/errors.hpp"
#include "hifd/fixtures.hpp"

using namespace hifd;

namespace {

DatasetConfig tiny_config() {
  DatasetConfig cfg;
  cfg.feeder = default_feeder();
  cfg.fs = 7680.0;
  cfg.window_len = 64;
  cfg.stride = 64;
  cfg.seed = 7;
  cfg.hif_nodes = {1, 2, 3};
  cfg.train_normal = 4;
  cfg.val_hif = 2;
  cfg.test_normal = 3;
  cfg.test_hif = 3;
  cfg.test_cap = 2;
  cfg.test_load = 2;
  return cfg;
}

std::filesystem::path temp_base(const char* stem) {
  return std::filesystem::temp_directory_path() / stem;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

bool same_samples(const Window& a, const Window& b) {
  return a.voltage == b.voltage && a.current == b.current;
}

}  // namespace

TEST_CASE("generation produces the configured counts with shared indices") {
  const DatasetConfig cfg = tiny_config();
  const Dataset ds = generate_dataset(cfg);

  // One window per (event, measured node); three measured nodes on the chain.
  CHECK(ds.train.size() == 4 * 3);
  CHECK(ds.validation.size() == 2 * 3);
  CHECK(ds.test.size() == (3 + 3 + 2 + 2) * 3);
  REQUIRE(ds.events.size() == 4 + 2 + 3 + 3 + 2 + 2);

  // Event ordinals are global and sequential across the three splits.
  for (std::size_t i = 0; i < ds.events.size(); ++i)
    CHECK(ds.events[i].index == i);

  // Labels follow the generation schedule.
  for (std::size_t i = 0; i < 4; ++i) CHECK(ds.events[i].label == Label::Normal);
  for (std::size_t i = 4; i < 6; ++i) CHECK(ds.events[i].label == Label::Hif);
  for (std::size_t i = 6; i < 9; ++i) CHECK(ds.events[i].label == Label::Normal);
  for (std::size_t i = 9; i < 12; ++i) CHECK(ds.events[i].label == Label::Hif);
  for (std::size_t i = 12; i < 14; ++i) CHECK(ds.events[i].label == Label::CapacitorSwitch);
  for (std::size_t i = 14; i < 16; ++i) CHECK(ds.events[i].label == Label::LoadSwitch);

  // Fault locations rotate through the configured list.
  CHECK(ds.events[4].target == cfg.hif_nodes[0]);
  CHECK(ds.events[5].target == cfg.hif_nodes[1]);
  CHECK(ds.events[9].target == cfg.hif_nodes[2]);
  CHECK(ds.events[10].target == cfg.hif_nodes[0]);

  // Each event's windows share its ordinal and cover every measured node.
  const auto ids = measured_nodes(cfg.feeder);
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const Window& w = ds.validation[e * ids.size() + i];
      CHECK(w.window_index == 4 + e);
      CHECK(w.node == ids[i]);
      CHECK(w.label == Label::Hif);
      CHECK(w.size() == cfg.window_len);
      CHECK(w.v_scale.has_value());
      CHECK(w.c_scale.has_value());
    }
}

TEST_CASE("generation is deterministic in the seed") {
  const DatasetConfig cfg = tiny_config();
  const Dataset a = generate_dataset(cfg);
  const Dataset b = generate_dataset(cfg);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i)
    REQUIRE(same_samples(a.train[i], b.train[i]));
  for (std::size_t i = 0; i < a.test.size(); ++i)
    REQUIRE(same_samples(a.test[i], b.test[i]));

  DatasetConfig other = cfg;
  other.seed = 8;
  const Dataset c = generate_dataset(other);
  CHECK_FALSE(same_samples(a.train[0], c.train[0]));
}

TEST_CASE("noise configuration perturbs the windows deterministically") {
  DatasetConfig cfg = tiny_config();
  cfg.snr_db = 30.0;
  const Dataset noisy1 = generate_dataset(cfg);
  const Dataset noisy2 = generate_dataset(cfg);
  REQUIRE(same_samples(noisy1.train[0], noisy2.train[0]));

  const Dataset clean = generate_dataset(tiny_config());
  CHECK_FALSE(same_samples(noisy1.train[0], clean.train[0]));
}

TEST_CASE("select_node filters by id and preserves order") {
  const Dataset ds = generate_dataset(tiny_config());
  const auto only2 = select_node(ds.train, 2);
  REQUIRE(only2.size() == 4);
  for (std::size_t i = 0; i < only2.size(); ++i) {
    CHECK(only2[i].node == 2);
    CHECK(only2[i].window_index == i);
  }
  CHECK(select_node(ds.train, 42).empty());
}

TEST_CASE("split storage round trips bit for bit") {
  const DatasetConfig cfg = tiny_config();
  const Dataset ds = generate_dataset(cfg);
  const auto base = temp_base("hifd_split_rt");
  save_split(base.string(), ds.test, cfg, "test");

  const auto back = load_split(base.string());
  REQUIRE(back.size() == ds.test.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].voltage == ds.test[i].voltage);
    REQUIRE(back[i].current == ds.test[i].current);
    CHECK(back[i].node == ds.test[i].node);
    CHECK(back[i].label == ds.test[i].label);
    CHECK(back[i].window_index == ds.test[i].window_index);
    CHECK(back[i].fs == ds.test[i].fs);
    REQUIRE(back[i].v_scale.has_value());
    CHECK(back[i].v_scale->mid == ds.test[i].v_scale->mid);
    CHECK(back[i].v_scale->halfspan == ds.test[i].v_scale->halfspan);
    CHECK(back[i].c_scale->mid == ds.test[i].c_scale->mid);
    CHECK(back[i].c_scale->halfspan == ds.test[i].c_scale->halfspan);
  }

  // Saving the identical split twice yields identical bytes (no timestamps).
  const auto base2 = temp_base("hifd_split_rt2");
  save_split(base2.string(), ds.test, cfg, "test");
  CHECK(slurp(base.string() + ".json") == slurp(base2.string() + ".json"));
  CHECK(slurp(base.string() + ".bin") == slurp(base2.string() + ".bin"));

  std::filesystem::remove(base.string() + ".json");
  std::filesystem::remove(base.string() + ".bin");
  std::filesystem::remove(base2.string() + ".json");
  std::filesystem::remove(base2.string() + ".bin");
}

TEST_CASE("split storage rejects broken inputs") {
  const DatasetConfig cfg = tiny_config();
  const Dataset ds = generate_dataset(cfg);
  const auto base = temp_base("hifd_split_bad");

  CHECK_THROWS_AS(save_split(base.string(), {}, cfg, "test"), ParameterError);

  std::vector<Window> raw = ds.train;
  denormalize(raw[0]);
  CHECK_THROWS_AS(save_split(base.string(), raw, cfg, "train"), ParameterError);

  // Truncated payload is detected by the byte count.
  save_split(base.string(), ds.validation, cfg, "validation");
  std::filesystem::resize_file(base.string() + ".bin",
                               std::filesystem::file_size(base.string() + ".bin") - 8);
  CHECK_THROWS_AS((void)load_split(base.string()), IoError);
  std::filesystem::remove(base.string() + ".json");
  std::filesystem::remove(base.string() + ".bin");

  CHECK_THROWS_AS((void)load_split((temp_base("hifd_no_such")).string()), IoError);
}

TEST_CASE("manifest carries provenance and label counts") {
  const DatasetConfig cfg = tiny_config();
  const Dataset ds = generate_dataset(cfg);
  const auto base = temp_base("hifd_split_manifest");
  save_split(base.string(), ds.test, cfg, "test");

  const std::string text = slurp(base.string() + ".json");
  CHECK(text.find("\"tool\": \"hifd/1.0.0\"") != std::string::npos);
  CHECK(text.find("\"split\": \"test\"") != std::string::npos);
  CHECK(text.find("\"seed\": 7") != std::string::npos);
  CHECK(text.find("\"config_hash\"") != std::string::npos);
  CHECK(text.find("\"normalized\": true") != std::string::npos);
  // 3 nodes x (3 normal + 3 hif + 2 cap + 2 load) events.
  CHECK(text.find("\"capacitor_switch\": 6") != std::string::npos);
  CHECK(text.find("\"hif\": 9") != std::string::npos);
  CHECK(text.find("\"load_switch\": 6") != std::string::npos);
  CHECK(text.find("\"normal\": 9") != std::string::npos);

  std::filesystem::remove(base.string() + ".json");
  std::filesystem::remove(base.string() + ".bin");
}

TEST_CASE("csv export writes provenance plus one row per sample") {
  const DatasetConfig cfg = tiny_config();
  const Dataset ds = generate_dataset(cfg);
  const auto path = temp_base("hifd_export.csv");
  const auto few = select_node(ds.validation, 1);
  export_csv(path.string(), few, cfg);

  std::ifstream f(path);
  std::string line;
  REQUIRE(std::getline(f, line));
  CHECK(line.rfind("# tool=hifd/1.0.0 seed=7 config_hash=", 0) == 0);
  REQUIRE(std::getline(f, line));
  CHECK(line == "window_index,node,label,sample,voltage,current");
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    ++rows;
    if (rows == 1) CHECK(line.rfind("4,1,hif,0,", 0) == 0);
  }
  CHECK(rows == few.size() * cfg.window_len);
  std::filesystem::remove(path);
}

TEST_CASE("config hash is stable and sensitive") {
  const DatasetConfig cfg = tiny_config();
  CHECK(config_hash(cfg) == config_hash(cfg));
  DatasetConfig other = cfg;
  other.seed = 8;
  CHECK(config_hash(other) != config_hash(cfg));
  other = cfg;
  other.snr_db = 50.0;
  CHECK(config_hash(other) != config_hash(cfg));
  other = cfg;
  other.hif.rp_range.second = 1500.0;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config JSON round trips every field") {
  DatasetConfig cfg = tiny_config();
  cfg.snr_db = 42.5;
  cfg.monitor_node = 3;
  cfg.hif_nodes = {2, 3};
  cfg.cap_node = 1;
  cfg.load_node = 3;
  cfg.hif.rp_range = {700.0, 1300.0};
  cfg.cap_q_range = {1e5, 9e5};
  cfg.cap_ring_gain = 7.5;
  cfg.cap_damping = 250.0;
  cfg.cap_ring_freq = 480.0;
  cfg.load_s_range = {2e5, 8e5};
  cfg.load_pf = 0.95;
  cfg.load_jitter = {0.9, 1.1};

  const DatasetConfig back = dataset_config_from_json(dataset_config_to_json(cfg));
  CHECK(back.fs == cfg.fs);
  CHECK(back.base_freq == cfg.base_freq);
  CHECK(back.window_len == cfg.window_len);
  CHECK(back.stride == cfg.stride);
  CHECK(back.snr_db == cfg.snr_db);
  CHECK(back.seed == cfg.seed);
  CHECK(back.monitor_node == cfg.monitor_node);
  CHECK(back.hif_nodes == cfg.hif_nodes);
  CHECK(back.cap_node == cfg.cap_node);
  CHECK(back.load_node == cfg.load_node);
  CHECK(back.hif.rp_range == cfg.hif.rp_range);
  CHECK(back.hif.rn_range == cfg.hif.rn_range);
  CHECK(back.hif.vp_range == cfg.hif.vp_range);
  CHECK(back.hif.vn_range == cfg.hif.vn_range);
  CHECK(back.hif.resample_rate == cfg.hif.resample_rate);
  CHECK(back.cap_q_range == cfg.cap_q_range);
  CHECK(back.cap_ring_gain == cfg.cap_ring_gain);
  CHECK(back.cap_damping == cfg.cap_damping);
  CHECK(back.cap_ring_freq == cfg.cap_ring_freq);
  CHECK(back.load_s_range == cfg.load_s_range);
  CHECK(back.load_pf == cfg.load_pf);
  CHECK(back.load_jitter == cfg.load_jitter);
  CHECK(back.train_normal == cfg.train_normal);
  CHECK(back.val_hif == cfg.val_hif);
  CHECK(back.test_normal == cfg.test_normal);
  CHECK(back.test_hif == cfg.test_hif);
  CHECK(back.test_cap == cfg.test_cap);
  CHECK(back.test_load == cfg.test_load);
  CHECK(config_hash(back) == config_hash(cfg));

  // Infinite snr survives the trip through its sentinel.
  const DatasetConfig inf_back = dataset_config_from_json(dataset_config_to_json(tiny_config()));
  CHECK(std::isinf(inf_back.snr_db));

  CHECK_THROWS_AS((void)dataset_config_from_json("{oops"), IoError);
  CHECK_THROWS_AS((void)dataset_config_from_json("{\"snr_db\": \"high\"}"), IoError);
}

TEST_CASE("config validation rejects inconsistent setups") {
  DatasetConfig cfg = tiny_config();
  cfg.monitor_node = 0;
  CHECK_THROWS_AS(cfg.validate(), TopologyError);
  cfg = tiny_config();
  cfg.hif_nodes = {};
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = tiny_config();
  cfg.hif_nodes = {9};
  CHECK_THROWS_AS(cfg.validate(), TopologyError);
  cfg = tiny_config();
  cfg.window_len = 8;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = tiny_config();
  cfg.fs = 100.0;
  CHECK_THROWS_AS(cfg.validate(), SamplingError);
  cfg = tiny_config();
  cfg.load_pf = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
