#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "radarfield/dataset.hpp"

// doctest comes last: the tensor library's logging shims define a
// CHECK macro that would otherwise shadow the assertion macro.
#undef CHECK
#include "doctest.h"

using namespace radarfield;
using namespace radarfield::dataset;
namespace fs = std::filesystem;

namespace {

DatasetConfig tiny_cfg(std::uint64_t seed) {
  DatasetConfig cfg;
  cfg.sim.K = cfg.sim.L = 16;
  cfg.sim.T = 4;
  cfg.n_train = 3;
  cfg.n_test = 2;
  cfg.n_radars = 2;
  cfg.d_tags = {"1", "inf"};
  cfg.master_seed = seed;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("range tags parse to values") {
  CHECK(parse_range("1") == 1.0);
  CHECK(parse_range("2.5") == 2.5);
  CHECK(parse_range("inf") == std::numeric_limits<double>::infinity());
  CHECK_THROWS(parse_range("banana"));
  CHECK_THROWS(parse_range("-1"));
}

TEST_CASE("container round-trips with verified hashes and exact shapes") {
  TempDir dir("rf_container_test");
  const auto man = generate_dataset(tiny_cfg(5), dir.path.string());
  CHECK(man.sequences.size() == 5u);
  CHECK(man.split("train").size() == 3u);
  CHECK(man.split("test").size() == 2u);
  man.norm.validate();

  const auto loaded = load_manifest(dir.path.string());
  CHECK(loaded.content_hash == man.content_hash);
  CHECK(loaded.geometry() == man.geometry());

  const auto s = load_sequence(dir.path.string(), loaded, *loaded.split("train")[0], "1");
  CHECK(s.truth_v.sizes() == torch::IntArrayRef({4, 2, 16, 16}));
  CHECK(s.truth_q.sizes() == torch::IntArrayRef({4, 1, 16, 16}));
  CHECK(s.radar_pos.sizes() == torch::IntArrayRef({2, 2}));
  CHECK(s.mask.sizes() == torch::IntArrayRef({2, 16, 16}));
  CHECK(s.proj.sizes() == torch::IntArrayRef({2, 2, 16, 16}));
  CHECK(s.obs.sizes() == torch::IntArrayRef({4, 4, 16, 16}));
  CHECK(s.obs.dtype() == torch::kFloat32);

  // Training fields live inside the normalization bounds by construction.
  CHECK(s.truth_v.min().item<float>() >= -1.0f - 1e-5f);
  CHECK(s.truth_v.max().item<float>() <= 1.0f + 1e-5f);
  CHECK(s.truth_q.max().item<float>() <= 1.0f + 1e-5f);

  // Observation channels r_n then q_n are zero outside radar n's mask.
  for (int n = 0; n < 2; ++n) {
    const auto off = (1.0f - s.mask.index({n})).unsqueeze(0);
    CHECK((s.obs.index({torch::indexing::Slice(), n}) * off).abs().max().item<float>() == 0.0f);
    CHECK((s.obs.index({torch::indexing::Slice(), 2 + n}) * off).abs().max().item<float>() ==
          0.0f);
  }
}

TEST_CASE("generation is byte-deterministic in the master seed") {
  TempDir a("rf_det_a"), b("rf_det_b");
  const auto ma = generate_dataset(tiny_cfg(9), a.path.string());
  const auto mb = generate_dataset(tiny_cfg(9), b.path.string());
  CHECK(ma.content_hash == mb.content_hash);

  for (const auto& rec : ma.sequences) {
    std::ifstream fa(a.path / rec.file, std::ios::binary);
    std::ifstream fb(b.path / rec.file, std::ios::binary);
    std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(da == db);
    CHECK(!da.empty());
  }

  TempDir c("rf_det_c");
  const auto mc = generate_dataset(tiny_cfg(10), c.path.string());
  CHECK(mc.content_hash != ma.content_hash);
}

TEST_CASE("corrupted blobs are rejected on load") {
  TempDir dir("rf_corrupt_test");
  const auto man = generate_dataset(tiny_cfg(5), dir.path.string());
  const auto& rec = *man.split("train")[1];
  {
    std::fstream f(dir.path / rec.file,
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(128);
    char byte = 0x5c;
    f.write(&byte, 1);
  }
  CHECK_THROWS(load_sequence(dir.path.string(), man, rec, "1"));
}

TEST_CASE("encoder input stacks observations with masked beam directions") {
  TempDir dir("rf_encin_test");
  const auto man = generate_dataset(tiny_cfg(5), dir.path.string());
  const auto s = load_sequence(dir.path.string(), man, *man.split("test")[0], "inf");
  const auto in = encoder_input(s);
  CHECK(in.sizes() == torch::IntArrayRef({4, 8, 16, 16}));
  using torch::indexing::Slice;
  for (int n = 0; n < 2; ++n) {
    // channel layout per radar: r, q, ax, ay
    CHECK(torch::equal(in.index({Slice(), 4 * n}), s.obs.index({Slice(), n})));
    CHECK(torch::equal(in.index({Slice(), 4 * n + 1}), s.obs.index({Slice(), 2 + n})));
    const auto want_ax = s.proj.index({n, 0}) * s.mask.index({n});
    CHECK(torch::equal(in.index({0, 4 * n + 2}), want_ax));
  }
}

TEST_CASE("fixed placement reuses one radar layout across sequences") {
  auto cfg = tiny_cfg(5);
  cfg.fixed_radars = true;
  TempDir dir("rf_fixed_test");
  const auto man = generate_dataset(cfg, dir.path.string());
  const auto s0 = load_sequence(dir.path.string(), man, *man.split("train")[0], "1");
  const auto s1 = load_sequence(dir.path.string(), man, *man.split("train")[1], "1");
  CHECK(torch::equal(s0.radar_pos, s1.radar_pos));

  TempDir dir2("rf_free_test");
  const auto man2 = generate_dataset(tiny_cfg(5), dir2.path.string());
  const auto t0 = load_sequence(dir2.path.string(), man2, *man2.split("train")[0], "1");
  const auto t1 = load_sequence(dir2.path.string(), man2, *man2.split("train")[1], "1");
  CHECK(!torch::equal(t0.radar_pos, t1.radar_pos));
}
