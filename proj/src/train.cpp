#include "radarfield/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <utility>

#include "radarfield/objective.hpp"

namespace radarfield::train {

namespace {

constexpr std::uint64_t kValSplitStream = 0x5EED5011ULL;
constexpr std::uint64_t kEpochStreamBase = 0xE60C0000ULL;
constexpr std::uint64_t kSampleStream = 0x05A3F1EULL;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void fisher_yates(std::vector<std::size_t>& v, Rng& r) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[r.integer(i)]);
}

std::vector<dataset::LoadedSequence> load_first(const std::string& dir,
                                                const dataset::Manifest& man,
                                                const std::string& split,
                                                const std::string& d_tag, int limit) {
  const auto recs = man.split(split);
  if (limit > static_cast<int>(recs.size()))
    throw std::runtime_error("requested " + std::to_string(limit) + " " + split +
                             " sequences, dataset has " + std::to_string(recs.size()));
  const int n = limit < 0 ? static_cast<int>(recs.size()) : limit;
  std::vector<dataset::LoadedSequence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(dataset::load_sequence(dir, man, *recs[i], d_tag));
  return out;
}

std::vector<torch::Tensor> encoder_cache(const std::vector<dataset::LoadedSequence>& seqs) {
  std::vector<torch::Tensor> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(dataset::encoder_input(s));
  return out;
}

struct Batch {
  torch::Tensor enc_in;  // T x B x C x K x L
  torch::Tensor obs;     // T x B x 2N x K x L
  torch::Tensor mask;    // B x N x K x L
  torch::Tensor proj;    // B x N x 2 x K x L
};

Batch gather(const std::vector<dataset::LoadedSequence>& seqs,
             const std::vector<torch::Tensor>& enc_cache, const std::vector<std::size_t>& ids) {
  std::vector<torch::Tensor> e, o, m, p;
  e.reserve(ids.size()), o.reserve(ids.size()), m.reserve(ids.size()), p.reserve(ids.size());
  for (auto i : ids) {
    e.push_back(enc_cache[i]);
    o.push_back(seqs[i].obs);
    m.push_back(seqs[i].mask);
    p.push_back(seqs[i].proj);
  }
  Batch b;
  b.enc_in = torch::stack(e, 1);
  b.obs = torch::stack(o, 1);
  b.mask = torch::stack(m, 0);
  b.proj = torch::stack(p, 0);
  return b;
}

std::vector<std::vector<std::size_t>> chunks(const std::vector<std::size_t>& ids, int size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < ids.size(); i += static_cast<std::size_t>(size)) {
    const auto end = std::min(ids.size(), i + static_cast<std::size_t>(size));
    out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(i),
                     ids.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

// Held-out tail of a seeded shuffle; the same master seed always yields the
// same split.
void split_train_val(std::size_t n, double val_frac, std::uint64_t seed,
                     std::vector<std::size_t>& train_ids, std::vector<std::size_t>& val_ids) {
  if (n < 2) throw std::runtime_error("need at least 2 sequences to hold out validation");
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  Rng r(derive_seed(seed, kValSplitStream));
  fisher_yates(ids, r);
  auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
  n_val = std::max<std::size_t>(1, std::min(n_val, n - 1));
  val_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
  train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val), ids.end());
  std::sort(val_ids.begin(), val_ids.end());
  std::sort(train_ids.begin(), train_ids.end());
}

void check_train_config(const TrainConfig& cfg) {
  if (cfg.batch < 1 || cfg.vae_batch < 1) throw std::runtime_error("batch size must be >= 1");
  if (cfg.max_epochs < 0) throw std::runtime_error("max_epochs must be >= 0");
  if (cfg.patience < 1) throw std::runtime_error("patience must be >= 1");
  if (!(cfg.val_frac > 0.0 && cfg.val_frac < 1.0))
    throw std::runtime_error("val_frac must lie in (0, 1)");
}

std::vector<std::pair<std::string, torch::Tensor>> named_params(const torch::nn::Module& m) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : m.named_parameters()) out.emplace_back(p.key(), p.value());
  return out;
}

int meta_int(const checkpoint::Archive& ar, const std::string& key) {
  auto it = ar.meta.find(key);
  if (it == ar.meta.end()) throw std::runtime_error("checkpoint meta missing " + key);
  return std::stoi(it->second);
}

double meta_double(const checkpoint::Archive& ar, const std::string& key) {
  auto it = ar.meta.find(key);
  if (it == ar.meta.end()) throw std::runtime_error("checkpoint meta missing " + key);
  return std::stod(it->second);
}

NormalizationSpec meta_norm(const checkpoint::Archive& ar) {
  NormalizationSpec n;
  n.v_min = meta_double(ar, "v_min");
  n.v_max = meta_double(ar, "v_max");
  n.q_min = meta_double(ar, "q_min");
  n.q_max = meta_double(ar, "q_max");
  return n;
}

void put_common_meta(checkpoint::Archive& ar, const dataset::Manifest& man,
                     const std::string& d_tag, int n_train_use, const TrainConfig& cfg,
                     const std::string& run_id, int in_channels) {
  const auto geom = man.geometry();
  ar.meta["run_id"] = run_id;
  ar.meta["d"] = d_tag;
  ar.meta["n_train"] = std::to_string(n_train_use);
  ar.meta["seed"] = std::to_string(cfg.seed);
  ar.meta["epochs"] = std::to_string(cfg.max_epochs);
  ar.meta["patience"] = std::to_string(cfg.patience);
  ar.meta["K"] = std::to_string(geom.K);
  ar.meta["L"] = std::to_string(geom.L);
  ar.meta["in_channels"] = std::to_string(in_channels);
  ar.meta["v_min"] = g17(man.norm.v_min);
  ar.meta["v_max"] = g17(man.norm.v_max);
  ar.meta["q_min"] = g17(man.norm.q_min);
  ar.meta["q_max"] = g17(man.norm.q_max);
}

}  // namespace

SeqModelImpl::SeqModelImpl(std::int64_t in_channels, std::int64_t K, std::int64_t L,
                           lgssm::LgssmOptions opt_in)
    : opt(opt_in) {
  enc = register_module("enc", nets::ConvEncoder(in_channels, K, L, opt.M));
  dec = register_module("dec", nets::ConvDecoder(opt.D, K, L));
  dyn = register_module("dyn", lgssm::Lgssm(opt));
}

torch::Tensor SeqModelImpl::forward(const torch::Tensor& enc_in,
                                    lgssm::SmootherResult* smoother_out,
                                    lgssm::FilterResult* filter_out) {
  TORCH_CHECK(enc_in.dim() == 5, "encoder input must be T x B x C x K x L");
  const auto T = enc_in.size(0), B = enc_in.size(1);
  const auto K = enc_in.size(3), L = enc_in.size(4);
  auto w = enc->forward(enc_in.reshape({T * B, enc_in.size(2), K, L})).reshape({T, B, opt.M});
  auto sr = dyn->smooth(w, filter_out);
  auto decoded = dec->forward(sr.means.reshape({T * B, opt.D})).reshape({T, B, 3, K, L});
  if (smoother_out) *smoother_out = std::move(sr);
  return decoded;
}

MetricsCsv::MetricsCsv(const std::string& path) : f_(path, std::ios::trunc) {
  if (!f_) throw std::runtime_error("cannot open metrics file " + path);
  f_ << "run_id,method,d,n_train,seed,epoch,L_recons,L_physics,RMSE_v,RMSE_q\n";
  f_.flush();
}

void MetricsCsv::row(const std::string& run_id, const std::string& method,
                     const std::string& d, int n_train, std::uint64_t seed,
                     std::optional<int> epoch, std::optional<double> l_recons,
                     std::optional<double> l_physics, std::optional<double> rmse_v,
                     std::optional<double> rmse_q) {
  f_ << run_id << ',' << method << ',' << d << ',' << n_train << ',' << seed << ',';
  if (epoch) f_ << *epoch;
  f_ << ',';
  if (l_recons) f_ << g17(*l_recons);
  f_ << ',';
  if (l_physics) f_ << g17(*l_physics);
  f_ << ',';
  if (rmse_v) f_ << g17(*rmse_v);
  f_ << ',';
  if (rmse_q) f_ << g17(*rmse_q);
  f_ << '\n';
  f_.flush();
}

TrainOutcome train_model(const std::string& data_dir, const dataset::Manifest& man,
                         const std::string& d_tag, int n_train_use, const TrainConfig& cfg,
                         const std::string& checkpoint_path, MetricsCsv& csv,
                         const std::string& run_id) {
  check_train_config(cfg);
  torch::manual_seed(cfg.seed);
  const auto geom = man.geometry();
  auto seqs = load_first(data_dir, man, "train", d_tag, n_train_use);
  auto enc_cache = encoder_cache(seqs);
  const auto N = seqs.front().mask.size(0);
  const int in_channels = static_cast<int>(4 * N);

  std::vector<std::size_t> train_ids, val_ids;
  split_train_val(seqs.size(), cfg.val_frac, cfg.seed, train_ids, val_ids);
  const auto val_batches = chunks(val_ids, cfg.batch);

  lgssm::LgssmOptions lopt;
  lopt.learn_prior = cfg.learn_prior;
  SeqModel model(in_channels, geom.K, geom.L, lopt);
  torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(cfg.lr));
  const auto named = named_params(*model);

  auto validation_loss = [&]() {
    torch::NoGradGuard ng;
    double sum = 0.0;
    for (const auto& ids : val_batches) {
      auto b = gather(seqs, enc_cache, ids);
      auto decoded = model->forward(b.enc_in);
      auto losses = objective::total_objective(decoded, b.obs, b.mask, b.proj, man.norm, geom,
                                               cfg.physics, cfg.lambda_physics);
      sum += losses.total.item<double>() * static_cast<double>(ids.size());
    }
    return sum / static_cast<double>(val_ids.size());
  };

  auto save_checkpoint = [&](int best_epoch, double best_val) {
    checkpoint::Archive ar;
    checkpoint::put_module(ar, "model", *model);
    checkpoint::put_adam(ar, "adam", opt, named);
    put_common_meta(ar, man, d_tag, n_train_use, cfg, run_id, in_channels);
    ar.meta["method"] = "ours";
    ar.meta["D"] = std::to_string(lopt.D);
    ar.meta["M"] = std::to_string(lopt.M);
    ar.meta["C"] = std::to_string(lopt.C);
    ar.meta["coeff_hidden"] = std::to_string(lopt.coeff_hidden);
    ar.meta["process_noise"] = g17(lopt.process_noise);
    ar.meta["prior_var"] = g17(lopt.prior_var);
    ar.meta["jitter"] = g17(lopt.jitter);
    ar.meta["learn_prior"] = cfg.learn_prior ? "1" : "0";
    ar.meta["physics"] = cfg.physics ? "1" : "0";
    ar.meta["lambda_physics"] = g17(cfg.lambda_physics);
    ar.meta["best_epoch"] = std::to_string(best_epoch);
    ar.meta["best_val"] = g17(best_val);
    checkpoint::save(ar, checkpoint_path);
  };

  TrainOutcome out;
  out.best_val = std::numeric_limits<double>::infinity();
  model->train();
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto order = train_ids;
    Rng shuffle_rng(derive_seed(cfg.seed, kEpochStreamBase + static_cast<std::uint64_t>(epoch)));
    fisher_yates(order, shuffle_rng);
    int batch_index = 0;
    for (const auto& ids : chunks(order, cfg.batch)) {
      auto b = gather(seqs, enc_cache, ids);
      auto decoded = model->forward(b.enc_in);
      auto losses = objective::total_objective(decoded, b.obs, b.mask, b.proj, man.norm, geom,
                                               cfg.physics, cfg.lambda_physics);
      const double recons = losses.recons.item<double>();
      const double physics = losses.physics.item<double>();
      if (!std::isfinite(recons) || !std::isfinite(physics))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_index));
      opt.zero_grad();
      losses.total.backward();
      opt.step();
      csv.row(run_id, "ours", d_tag, n_train_use, cfg.seed, epoch, recons, physics,
              std::nullopt, std::nullopt);
      ++batch_index;
    }
    out.epochs_run = epoch + 1;
    const double val = validation_loss();
    if (!std::isfinite(val))
      throw std::runtime_error("non-finite validation loss at epoch " + std::to_string(epoch));
    if (val < out.best_val) {
      out.best_val = val;
      out.best_epoch = epoch;
      save_checkpoint(epoch, val);
    } else if (epoch - out.best_epoch >= cfg.patience) {
      break;
    }
  }
  if (out.best_epoch < 0) save_checkpoint(-1, std::numeric_limits<double>::quiet_NaN());
  return out;
}

SeqModel model_from_archive(const checkpoint::Archive& ar) {
  lgssm::LgssmOptions lopt;
  lopt.D = meta_int(ar, "D");
  lopt.M = meta_int(ar, "M");
  lopt.C = meta_int(ar, "C");
  lopt.coeff_hidden = meta_int(ar, "coeff_hidden");
  lopt.process_noise = meta_double(ar, "process_noise");
  lopt.prior_var = meta_double(ar, "prior_var");
  lopt.jitter = meta_double(ar, "jitter");
  lopt.learn_prior = meta_int(ar, "learn_prior") != 0;
  SeqModel model(meta_int(ar, "in_channels"), meta_int(ar, "K"), meta_int(ar, "L"), lopt);
  checkpoint::load_module(ar, "model", *model);
  return model;
}

baselines::ConvVae vae_from_archive(const checkpoint::Archive& ar) {
  baselines::ConvVae model(meta_int(ar, "in_channels"), meta_int(ar, "K"), meta_int(ar, "L"),
                           meta_int(ar, "latent"));
  checkpoint::load_module(ar, "model", *model);
  return model;
}

EvalResult evaluate_model(const std::string& data_dir, const dataset::Manifest& man,
                          const std::string& d_tag, const std::string& checkpoint_path,
                          int n_samples, std::uint64_t sample_seed) {
  if (n_samples < 2) throw std::runtime_error("need at least 2 posterior samples for a std");
  torch::NoGradGuard ng;
  const auto ar = checkpoint::load(checkpoint_path);
  auto model = model_from_archive(ar);
  model->eval();

  auto seqs = load_first(data_dir, man, "test", d_tag, -1);
  auto enc_cache = encoder_cache(seqs);
  const auto T = seqs.front().obs.size(0);
  Rng sample_rng(derive_seed(sample_seed, kSampleStream));

  std::vector<std::size_t> ids(seqs.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;

  EvalResult r;
  r.rmse_v_t.assign(static_cast<std::size_t>(T), 0.0);
  r.rmse_q_t.assign(static_cast<std::size_t>(T), 0.0);
  r.std_v_t.assign(static_cast<std::size_t>(T), 0.0);
  r.std_q_t.assign(static_cast<std::size_t>(T), 0.0);
  using torch::indexing::Slice;
  for (const auto& batch_ids : chunks(ids, 10)) {
    auto b = gather(seqs, enc_cache, batch_ids);
    std::vector<torch::Tensor> tv, tq;
    for (auto i : batch_ids) {
      tv.push_back(seqs[i].truth_v);
      tq.push_back(seqs[i].truth_q);
    }
    auto truth_v = torch::stack(tv, 1);  // T x B x 2 x K x L
    auto truth_q = torch::stack(tq, 1);  // T x B x 1 x K x L
    lgssm::SmootherResult sr;
    auto decoded = model->forward(b.enc_in, &sr);
    auto err_v = (decoded.index({Slice(), Slice(), Slice(0, 2)}) - truth_v).pow(2);
    auto err_q = (decoded.index({Slice(), Slice(), Slice(2, 3)}) - truth_q).pow(2);
    r.rmse_v += err_v.mean({0, 2, 3, 4}).sqrt().sum().item<double>();
    r.rmse_q += err_q.mean({0, 2, 3, 4}).sqrt().sum().item<double>();
    auto curve_v = err_v.mean({2, 3, 4}).sqrt().sum(1);  // T
    auto curve_q = err_q.mean({2, 3, 4}).sqrt().sum(1);
    auto curve_v_a = curve_v.to(torch::kFloat64).contiguous();
    auto curve_q_a = curve_q.to(torch::kFloat64).contiguous();
    for (std::int64_t t = 0; t < T; ++t) {
      r.rmse_v_t[static_cast<std::size_t>(t)] += curve_v_a[t].item<double>();
      r.rmse_q_t[static_cast<std::size_t>(t)] += curve_q_a[t].item<double>();
    }
    const auto B = static_cast<std::int64_t>(batch_ids.size());
    for (std::int64_t t = 0; t < T; ++t) {
      auto z = lgssm::sample_marginal_posterior(sr, t, n_samples, sample_rng);  // n x B x D
      auto fields = model->dec->forward(z.reshape({n_samples * B, model->opt.D}))
                        .reshape({n_samples, B, 3, decoded.size(3), decoded.size(4)});
      auto mean = fields.mean(0, /*keepdim=*/true);
      auto sd = ((fields - mean).pow(2).sum(0) / static_cast<double>(n_samples - 1)).sqrt();
      r.std_v_t[static_cast<std::size_t>(t)] +=
          sd.index({Slice(), Slice(0, 2)}).mean({1, 2, 3}).sum().item<double>();
      r.std_q_t[static_cast<std::size_t>(t)] +=
          sd.index({Slice(), Slice(2, 3)}).mean({1, 2, 3}).sum().item<double>();
    }
  }
  const auto n = static_cast<double>(seqs.size());
  r.rmse_v /= n;
  r.rmse_q /= n;
  for (auto& x : r.rmse_v_t) x /= n;
  for (auto& x : r.rmse_q_t) x /= n;
  for (auto& x : r.std_v_t) x /= n;
  for (auto& x : r.std_q_t) x /= n;
  return r;
}

TrainOutcome train_vae(const std::string& data_dir, const dataset::Manifest& man,
                       const std::string& d_tag, int n_train_use, const TrainConfig& cfg,
                       const std::string& checkpoint_path, MetricsCsv& csv,
                       const std::string& run_id) {
  check_train_config(cfg);
  torch::manual_seed(cfg.seed);
  const auto geom = man.geometry();
  auto seqs = load_first(data_dir, man, "train", d_tag, n_train_use);
  auto enc_cache = encoder_cache(seqs);
  const auto N = seqs.front().mask.size(0);
  const int in_channels = static_cast<int>(4 * N);
  const auto T = seqs.front().obs.size(0);
  constexpr int kLatent = 128;

  // Validation is held out by sequence so no frame of a validation sequence
  // leaks into training.
  std::vector<std::size_t> train_seq, val_seq;
  split_train_val(seqs.size(), cfg.val_frac, cfg.seed, train_seq, val_seq);
  std::vector<std::pair<std::size_t, std::int64_t>> train_frames, val_frames;
  for (auto s : train_seq)
    for (std::int64_t t = 0; t < T; ++t) train_frames.emplace_back(s, t);
  for (auto s : val_seq)
    for (std::int64_t t = 0; t < T; ++t) val_frames.emplace_back(s, t);

  baselines::ConvVae model(in_channels, geom.K, geom.L, kLatent);
  torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(cfg.lr));
  const auto named = named_params(*model);

  auto frame_batch = [&](const std::vector<std::pair<std::size_t, std::int64_t>>& frames,
                         std::size_t lo, std::size_t hi) {
    std::vector<torch::Tensor> x, o, m, p;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto [s, t] = frames[i];
      x.push_back(enc_cache[s].index({t}));
      o.push_back(seqs[s].obs.index({t}));
      m.push_back(seqs[s].mask);
      p.push_back(seqs[s].proj);
    }
    return std::make_tuple(torch::stack(x, 0), torch::stack(o, 0), torch::stack(m, 0),
                           torch::stack(p, 0));
  };

  auto validation_loss = [&]() {
    torch::NoGradGuard ng;
    double sum = 0.0;
    for (std::size_t lo = 0; lo < val_frames.size();
         lo += static_cast<std::size_t>(cfg.vae_batch)) {
      const auto hi = std::min(val_frames.size(), lo + static_cast<std::size_t>(cfg.vae_batch));
      auto [x, o, m, p] = frame_batch(val_frames, lo, hi);
      auto [decoded, mu, logvar] = model->forward(x, /*sample=*/false);
      auto losses = baselines::vae_loss(decoded, mu, logvar, o, m, p);
      sum += losses.total.item<double>() * static_cast<double>(hi - lo);
    }
    return sum / static_cast<double>(val_frames.size());
  };

  auto save_checkpoint = [&](int best_epoch, double best_val) {
    checkpoint::Archive ar;
    checkpoint::put_module(ar, "model", *model);
    checkpoint::put_adam(ar, "adam", opt, named);
    put_common_meta(ar, man, d_tag, n_train_use, cfg, run_id, in_channels);
    ar.meta["method"] = "vae";
    ar.meta["latent"] = std::to_string(kLatent);
    ar.meta["best_epoch"] = std::to_string(best_epoch);
    ar.meta["best_val"] = g17(best_val);
    checkpoint::save(ar, checkpoint_path);
  };

  TrainOutcome out;
  out.best_val = std::numeric_limits<double>::infinity();
  model->train();
  std::vector<std::size_t> order(train_frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, kEpochStreamBase + static_cast<std::uint64_t>(epoch)));
    fisher_yates(order, shuffle_rng);
    std::vector<std::pair<std::size_t, std::int64_t>> shuffled(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) shuffled[i] = train_frames[order[i]];
    int batch_index = 0;
    for (std::size_t lo = 0; lo < shuffled.size(); lo += static_cast<std::size_t>(cfg.vae_batch)) {
      const auto hi = std::min(shuffled.size(), lo + static_cast<std::size_t>(cfg.vae_batch));
      auto [x, o, m, p] = frame_batch(shuffled, lo, hi);
      auto [decoded, mu, logvar] = model->forward(x, /*sample=*/true);
      auto losses = baselines::vae_loss(decoded, mu, logvar, o, m, p);
      const double recon = losses.recon.item<double>();
      if (!std::isfinite(recon) || !std::isfinite(losses.kl.item<double>()))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_index));
      opt.zero_grad();
      losses.total.backward();
      opt.step();
      csv.row(run_id, "vae", d_tag, n_train_use, cfg.seed, epoch, recon, std::nullopt,
              std::nullopt, std::nullopt);
      ++batch_index;
    }
    out.epochs_run = epoch + 1;
    const double val = validation_loss();
    if (!std::isfinite(val))
      throw std::runtime_error("non-finite validation loss at epoch " + std::to_string(epoch));
    if (val < out.best_val) {
      out.best_val = val;
      out.best_epoch = epoch;
      save_checkpoint(epoch, val);
    } else if (epoch - out.best_epoch >= cfg.patience) {
      break;
    }
  }
  if (out.best_epoch < 0) save_checkpoint(-1, std::numeric_limits<double>::quiet_NaN());
  return out;
}

EvalResult evaluate_vae(const std::string& data_dir, const dataset::Manifest& man,
                        const std::string& d_tag, const std::string& checkpoint_path) {
  torch::NoGradGuard ng;
  const auto ar = checkpoint::load(checkpoint_path);
  auto model = vae_from_archive(ar);
  model->eval();
  auto seqs = load_first(data_dir, man, "test", d_tag, -1);
  const auto T = seqs.front().obs.size(0);

  EvalResult r;
  r.rmse_v_t.assign(static_cast<std::size_t>(T), 0.0);
  r.rmse_q_t.assign(static_cast<std::size_t>(T), 0.0);
  using torch::indexing::Slice;
  for (const auto& s : seqs) {
    auto [decoded, mu, logvar] = model->forward(dataset::encoder_input(s), /*sample=*/false);
    auto err_v = (decoded.index({Slice(), Slice(0, 2)}) - s.truth_v).pow(2);
    auto err_q = (decoded.index({Slice(), Slice(2, 3)}) - s.truth_q).pow(2);
    r.rmse_v += err_v.mean().sqrt().item<double>();
    r.rmse_q += err_q.mean().sqrt().item<double>();
    auto cv = err_v.mean({1, 2, 3}).sqrt().to(torch::kFloat64).contiguous();
    auto cq = err_q.mean({1, 2, 3}).sqrt().to(torch::kFloat64).contiguous();
    for (std::int64_t t = 0; t < T; ++t) {
      r.rmse_v_t[static_cast<std::size_t>(t)] += cv[t].item<double>();
      r.rmse_q_t[static_cast<std::size_t>(t)] += cq[t].item<double>();
    }
  }
  const auto n = static_cast<double>(seqs.size());
  r.rmse_v /= n;
  r.rmse_q /= n;
  for (auto& x : r.rmse_v_t) x /= n;
  for (auto& x : r.rmse_q_t) x /= n;
  return r;
}

EvalResult evaluate_vvp(const std::string& data_dir, const dataset::Manifest& man,
                        const std::string& d_tag) {
  const auto geom = man.geometry();
  auto seqs = load_first(data_dir, man, "test", d_tag, -1);
  const auto T = seqs.front().obs.size(0);

  EvalResult r;
  r.rmse_q = std::numeric_limits<double>::quiet_NaN();  // no density estimate
  r.rmse_v_t.assign(static_cast<std::size_t>(T), 0.0);
  for (const auto& s : seqs) {
    auto recon = baselines::vvp_reconstruct(s, geom);  // T x 2 x K x L
    auto err_v = (recon - s.truth_v).pow(2);
    r.rmse_v += err_v.mean().sqrt().item<double>();
    auto cv = err_v.mean({1, 2, 3}).sqrt().to(torch::kFloat64).contiguous();
    for (std::int64_t t = 0; t < T; ++t)
      r.rmse_v_t[static_cast<std::size_t>(t)] += cv[t].item<double>();
  }
  const auto n = static_cast<double>(seqs.size());
  r.rmse_v /= n;
  for (auto& x : r.rmse_v_t) x /= n;
  return r;
}

void write_curves(const std::string& path, const std::string& run_id,
                  const std::string& method, const std::string& d_tag, const EvalResult& r) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open curves file " + path);
  f << "run_id,method,d,t,rmse_v,rmse_q,std_v,std_q\n";
  const std::size_t T = std::max(r.rmse_v_t.size(), r.rmse_q_t.size());
  for (std::size_t t = 0; t < T; ++t) {
    f << run_id << ',' << method << ',' << d_tag << ',' << t << ',';
    if (t < r.rmse_v_t.size()) f << g17(r.rmse_v_t[t]);
    f << ',';
    if (t < r.rmse_q_t.size()) f << g17(r.rmse_q_t[t]);
    f << ',';
    if (t < r.std_v_t.size()) f << g17(r.std_v_t[t]);
    f << ',';
    if (t < r.std_q_t.size()) f << g17(r.std_q_t[t]);
    f << '\n';
  }
}

}  // namespace radarfield::train
