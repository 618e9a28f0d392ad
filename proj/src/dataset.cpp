#include "radarfield/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace radarfield::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetConfig::validate() const {
  sim.validate();
  if (n_train < 1 || n_test < 0) throw std::invalid_argument("DatasetConfig: bad split sizes");
  if (n_radars < 1) throw std::invalid_argument("DatasetConfig: need at least one radar");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("DatasetConfig: negative noise sigma");
  if (d_tags.empty()) throw std::invalid_argument("DatasetConfig: no range settings");
  if (!(density_floor > 0.0)) throw std::invalid_argument("DatasetConfig: density floor must be positive");
  for (const auto& t : d_tags) parse_range(t);
}

double parse_range(const std::string& tag) {
  if (tag == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(tag, &pos);
  if (pos != tag.size() || !(v > 0.0)) throw std::invalid_argument("bad range tag: " + tag);
  return v;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<const SequenceRecord*> Manifest::split(const std::string& name) const {
  std::vector<const SequenceRecord*> out;
  for (const auto& r : sequences) {
    if (r.split == name) out.push_back(&r);
  }
  return out;
}

namespace {

// Seed-stream namespaces; one per independent random purpose.
constexpr std::uint64_t kStreamSim = 0x100000000ULL;
constexpr std::uint64_t kStreamRadar = 0x200000000ULL;
constexpr std::uint64_t kStreamNoise = 0x300000000ULL;
constexpr std::uint64_t kStreamFixedRadar = 0x4FEEDULL;

struct Writer {
  std::vector<float> buf;
  void put(double x) { buf.push_back(static_cast<float>(x)); }
  void put(const std::vector<double>& xs) {
    for (double x : xs) put(x);
  }
};

json sim_to_json(const synth::SimulationConfig& s) {
  return json{{"K", s.K},
              {"L", s.L},
              {"T", s.T},
              {"domain", s.domain},
              {"dt_sim", s.dt_sim},
              {"dt_sample", s.dt_sample},
              {"n_modes", s.n_modes},
              {"vel_weight_min", s.vel_weight_min},
              {"vel_weight_max", s.vel_weight_max},
              {"vel_var_min", s.vel_var_min},
              {"vel_var_max", s.vel_var_max},
              {"dens_weight_min", s.dens_weight_min},
              {"dens_weight_max", s.dens_weight_max},
              {"dens_var_min", s.dens_var_min},
              {"dens_var_max", s.dens_var_max},
              {"disp_max", s.disp_max},
              {"init_mass", s.init_mass},
              {"cfl_retries", s.cfl_retries}};
}

synth::SimulationConfig sim_from_json(const json& j) {
  synth::SimulationConfig s;
  s.K = j.at("K");
  s.L = j.at("L");
  s.T = j.at("T");
  s.domain = j.at("domain");
  s.dt_sim = j.at("dt_sim");
  s.dt_sample = j.at("dt_sample");
  s.n_modes = j.at("n_modes");
  s.vel_weight_min = j.at("vel_weight_min");
  s.vel_weight_max = j.at("vel_weight_max");
  s.vel_var_min = j.at("vel_var_min");
  s.vel_var_max = j.at("vel_var_max");
  s.dens_weight_min = j.at("dens_weight_min");
  s.dens_weight_max = j.at("dens_weight_max");
  s.dens_var_min = j.at("dens_var_min");
  s.dens_var_max = j.at("dens_var_max");
  s.disp_max = j.at("disp_max");
  s.init_mass = j.at("init_mass");
  s.cfl_retries = j.at("cfl_retries");
  return s;
}

std::vector<radar::RadarConfig> radars_for(const DatasetConfig& cfg, std::uint64_t radar_seed) {
  Rng rng(radar_seed);
  // Range is attached per d_tag later; sample positions with a placeholder.
  return radar::sample_radars(cfg.n_radars, 1.0, cfg.sim.geometry(), rng);
}

std::vector<float> build_blob(const DatasetConfig& cfg, const NormalizationSpec& norm,
                              const SequenceRecord& rec) {
  const GridGeometry geom = cfg.sim.geometry();
  const FieldSequence seq = synth::generate_sequence(cfg.sim, rec.sim_seed);
  const auto positions = radars_for(cfg, rec.radar_seed);

  Writer w;
  for (int t = 0; t < cfg.sim.T; ++t) {
    w.put(seq.velocity[t].x());
    w.put(seq.velocity[t].y());
  }
  for (int t = 0; t < cfg.sim.T; ++t) w.put(seq.density[t].values());
  for (const auto& r : positions) {
    w.put(r.position[0]);
    w.put(r.position[1]);
  }

  // Normalized fields feed the forward model so that observations live on the
  // same scale the decoder is trained to emit.
  std::vector<VectorField> vn;
  std::vector<ScalarField> qn;
  for (int t = 0; t < cfg.sim.T; ++t) {
    vn.push_back(normalize(seq.velocity[t], norm));
    qn.push_back(normalize(log_transform(seq.density[t], cfg.density_floor), norm));
  }

  for (std::size_t di = 0; di < cfg.d_tags.size(); ++di) {
    const double range = parse_range(cfg.d_tags[di]);
    auto rcfgs = positions;
    for (auto& r : rcfgs) r.range = range;
    const radar::RadarSet rs = radar::build_projections(rcfgs, geom);

    for (int n = 0; n < rs.count(); ++n) {
      for (std::size_t i = 0; i < geom.cells(); ++i) w.put(rs.mask[n][i] ? 1.0 : 0.0);
    }
    for (int n = 0; n < rs.count(); ++n) {
      w.put(rs.ax[n]);
      w.put(rs.ay[n]);
    }

    Rng noise_rng(derive_seed(rec.noise_seed, di));
    for (int t = 0; t < cfg.sim.T; ++t) {
      radar::Observation obs = radar::forward(vn[t], qn[t], rs);
      obs = radar::add_noise(obs, rs, cfg.noise_sigma, noise_rng);
      for (int n = 0; n < rs.count(); ++n) w.put(obs.radial[n]);
      for (int n = 0; n < rs.count(); ++n) w.put(obs.logdens[n]);
    }
  }
  return std::move(w.buf);
}

void write_file(const fs::path& path, const void* data, std::size_t bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("cannot open: " + path.string());
  const auto size = f.tellg();
  f.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(size));
  f.read(buf.data(), size);
  if (!f) throw std::runtime_error("read failed: " + path.string());
  return buf;
}

std::string combined_hash(const std::vector<SequenceRecord>& recs) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& r : recs) h = fnv1a(r.hash.data(), r.hash.size(), h);
  return hash_hex(h);
}

}  // namespace

Manifest generate_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  Manifest man;
  man.cfg = cfg;
  const int total = cfg.n_train + cfg.n_test;
  for (int id = 0; id < total; ++id) {
    SequenceRecord rec;
    rec.id = id;
    rec.split = id < cfg.n_train ? "train" : "test";
    rec.sim_seed = derive_seed(cfg.master_seed, kStreamSim + static_cast<std::uint64_t>(id));
    rec.radar_seed = cfg.fixed_radars
                         ? derive_seed(cfg.master_seed, kStreamFixedRadar)
                         : derive_seed(cfg.master_seed, kStreamRadar + static_cast<std::uint64_t>(id));
    rec.noise_seed = derive_seed(cfg.master_seed, kStreamNoise + static_cast<std::uint64_t>(id));
    char name[32];
    std::snprintf(name, sizeof(name), "seq_%05d.bin", id);
    rec.file = name;
    man.sequences.push_back(rec);
  }

  // Pass 1: normalization bounds from the training split.
  double v_lo = std::numeric_limits<double>::infinity(), v_hi = -v_lo;
  double q_lo = v_lo, q_hi = -v_lo;
  for (const auto& rec : man.sequences) {
    if (rec.split != "train") continue;
    const FieldSequence seq = synth::generate_sequence(cfg.sim, rec.sim_seed);
    for (int t = 0; t < cfg.sim.T; ++t) {
      for (double x : seq.velocity[t].x()) {
        v_lo = std::min(v_lo, x);
        v_hi = std::max(v_hi, x);
      }
      for (double y : seq.velocity[t].y()) {
        v_lo = std::min(v_lo, y);
        v_hi = std::max(v_hi, y);
      }
      const ScalarField q = log_transform(seq.density[t], cfg.density_floor);
      q_lo = std::min(q_lo, q.min());
      q_hi = std::max(q_hi, q.max());
    }
  }
  man.norm = NormalizationSpec{v_lo, v_hi, q_lo, q_hi};
  man.norm.validate();

  // Pass 2: regenerate (same seeds) and write blobs.
  for (auto& rec : man.sequences) {
    const std::vector<float> blob = build_blob(cfg, man.norm, rec);
    const std::size_t bytes = blob.size() * sizeof(float);
    rec.bytes = bytes;
    rec.hash = hash_hex(fnv1a(blob.data(), bytes));
    write_file(fs::path(out_dir) / rec.file, blob.data(), bytes);
  }
  man.content_hash = combined_hash(man.sequences);

  json j;
  j["format_version"] = man.format_version;
  j["sim"] = sim_to_json(cfg.sim);
  j["n_train"] = cfg.n_train;
  j["n_test"] = cfg.n_test;
  j["n_radars"] = cfg.n_radars;
  j["noise_sigma"] = cfg.noise_sigma;
  j["d_tags"] = cfg.d_tags;
  j["fixed_radars"] = cfg.fixed_radars;
  j["density_floor"] = cfg.density_floor;
  j["master_seed"] = cfg.master_seed;
  j["normalization"] = {{"v_min", man.norm.v_min},
                        {"v_max", man.norm.v_max},
                        {"q_min", man.norm.q_min},
                        {"q_max", man.norm.q_max}};
  json seqs = json::array();
  for (const auto& r : man.sequences) {
    seqs.push_back({{"id", r.id},
                    {"split", r.split},
                    {"sim_seed", r.sim_seed},
                    {"radar_seed", r.radar_seed},
                    {"noise_seed", r.noise_seed},
                    {"file", r.file},
                    {"bytes", r.bytes},
                    {"hash", r.hash}});
  }
  j["sequences"] = std::move(seqs);
  j["content_hash"] = man.content_hash;

  std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write manifest in " + out_dir);
  f << j.dump(2) << "\n";
  return man;
}

Manifest load_manifest(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "manifest.json");
  if (!f) throw std::runtime_error("no manifest.json in " + dir);
  json j;
  f >> j;

  Manifest man;
  man.format_version = j.at("format_version");
  if (man.format_version != 1) throw std::runtime_error("unsupported dataset format version");
  man.cfg.sim = sim_from_json(j.at("sim"));
  man.cfg.n_train = j.at("n_train");
  man.cfg.n_test = j.at("n_test");
  man.cfg.n_radars = j.at("n_radars");
  man.cfg.noise_sigma = j.at("noise_sigma");
  man.cfg.d_tags = j.at("d_tags").get<std::vector<std::string>>();
  man.cfg.fixed_radars = j.at("fixed_radars");
  man.cfg.density_floor = j.at("density_floor");
  man.cfg.master_seed = j.at("master_seed");
  const json& n = j.at("normalization");
  man.norm = NormalizationSpec{n.at("v_min"), n.at("v_max"), n.at("q_min"), n.at("q_max")};
  man.norm.validate();
  for (const json& s : j.at("sequences")) {
    SequenceRecord r;
    r.id = s.at("id");
    r.split = s.at("split");
    r.sim_seed = s.at("sim_seed");
    r.radar_seed = s.at("radar_seed");
    r.noise_seed = s.at("noise_seed");
    r.file = s.at("file");
    r.bytes = s.at("bytes");
    r.hash = s.at("hash");
    man.sequences.push_back(std::move(r));
  }
  man.content_hash = j.at("content_hash");
  if (man.content_hash != combined_hash(man.sequences)) {
    throw std::runtime_error("dataset content hash mismatch in " + dir);
  }
  man.cfg.validate();
  return man;
}

LoadedSequence load_sequence(const std::string& dir, const Manifest& man,
                             const SequenceRecord& rec, const std::string& d_tag) {
  const auto it = std::find(man.cfg.d_tags.begin(), man.cfg.d_tags.end(), d_tag);
  if (it == man.cfg.d_tags.end()) throw std::invalid_argument("unknown range tag: " + d_tag);
  const std::size_t di = static_cast<std::size_t>(it - man.cfg.d_tags.begin());

  const std::vector<char> raw = read_file(fs::path(dir) / rec.file);
  if (raw.size() != rec.bytes) throw std::runtime_error("blob size mismatch: " + rec.file);
  if (hash_hex(fnv1a(raw.data(), raw.size())) != rec.hash) {
    throw std::runtime_error("blob hash mismatch: " + rec.file);
  }
  const float* p = reinterpret_cast<const float*>(raw.data());

  const auto& sim = man.cfg.sim;
  const std::int64_t T = sim.T, K = sim.K, L = sim.L, N = man.cfg.n_radars;
  const std::int64_t cells = K * L;
  const std::int64_t sec_v = T * 2 * cells;
  const std::int64_t sec_rho = T * cells;
  const std::int64_t sec_pos = N * 2;
  const std::int64_t sec_mask = N * cells;
  const std::int64_t sec_proj = N * 2 * cells;
  const std::int64_t sec_obs = T * 2 * N * cells;
  const std::int64_t per_d = sec_mask + sec_proj + sec_obs;
  if (static_cast<std::int64_t>(raw.size() / sizeof(float)) !=
      sec_v + sec_rho + sec_pos + per_d * static_cast<std::int64_t>(man.cfg.d_tags.size())) {
    throw std::runtime_error("blob shape mismatch: " + rec.file);
  }

  const auto f32 = torch::TensorOptions().dtype(torch::kFloat32);
  auto tensor_of = [&](const float* src, std::vector<std::int64_t> shape) {
    return torch::from_blob(const_cast<float*>(src), shape, f32).clone();
  };

  LoadedSequence out;
  torch::Tensor v_phys = tensor_of(p, {T, 2, K, L});
  torch::Tensor rho = tensor_of(p + sec_v, {T, 1, K, L});
  out.radar_pos = tensor_of(p + sec_v + sec_rho, {N, 2});
  const float* pd = p + sec_v + sec_rho + sec_pos + static_cast<std::int64_t>(di) * per_d;
  out.mask = tensor_of(pd, {N, K, L});
  out.proj = tensor_of(pd + sec_mask, {N, 2, K, L});
  out.obs = tensor_of(pd + sec_mask + sec_proj, {T, 2 * N, K, L});

  const auto& nm = man.norm;
  out.truth_v = (v_phys - nm.v_min) * (2.0 / (nm.v_max - nm.v_min)) - 1.0;
  torch::Tensor q = torch::log(torch::clamp(rho, man.cfg.density_floor));
  out.truth_q = (q - nm.q_min) * (2.0 / (nm.q_max - nm.q_min)) - 1.0;
  return out;
}

std::vector<LoadedSequence> load_split(const std::string& dir, const Manifest& man,
                                       const std::string& split, const std::string& d_tag) {
  std::vector<LoadedSequence> out;
  for (const auto* rec : man.split(split)) out.push_back(load_sequence(dir, man, *rec, d_tag));
  if (out.empty()) throw std::runtime_error("empty split: " + split);
  return out;
}

torch::Tensor encoder_input(const LoadedSequence& s) {
  const std::int64_t T = s.obs.size(0);
  const std::int64_t N = s.mask.size(0);
  const std::int64_t K = s.mask.size(1);
  const std::int64_t L = s.mask.size(2);
  torch::Tensor in = torch::zeros({T, 4 * N, K, L});
  for (std::int64_t n = 0; n < N; ++n) {
    in.narrow(1, 4 * n, 1).copy_(s.obs.narrow(1, n, 1));          // radial
    in.narrow(1, 4 * n + 1, 1).copy_(s.obs.narrow(1, N + n, 1));  // log-density
    in.narrow(1, 4 * n + 2, 2).copy_((s.proj[n] * s.mask[n]).unsqueeze(0).expand({T, 2, K, L}));
  }
  return in;
}

}  // namespace radarfield::dataset
