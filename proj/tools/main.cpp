#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "radarfield/baselines.hpp"
#include "radarfield/checkpoint.hpp"
#include "radarfield/dataset.hpp"
#include "radarfield/svgplot.hpp"
#include "radarfield/train.hpp"

namespace fs = std::filesystem;
using namespace radarfield;

namespace {

// RADARFIELD_OUT_DIR overrides the default of --out; an explicit flag wins.
void apply_out_env(const CLI::App* sub, std::string& out) {
  if (sub->count("--out") > 0) return;
  if (const char* env = std::getenv("RADARFIELD_OUT_DIR"); env && *env) out = env;
}

std::optional<double> finite_or_none(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("CSV missing column " + name);
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = cells;
      first = false;
    } else {
      cells.resize(t.header.size());
      t.rows.push_back(cells);
    }
  }
  return t;
}

std::vector<double> plane_to_vec(const torch::Tensor& plane) {
  auto p = plane.to(torch::kFloat64).contiguous();
  const auto* d = p.data_ptr<double>();
  return std::vector<double>(d, d + p.numel());
}

struct EvalRow {
  std::string run_id, method, d;
  int n_train = 0;
  std::uint64_t seed = 0;
  train::EvalResult r;
};

void write_eval_outputs(const std::string& out, const EvalRow& e) {
  fs::create_directories(out);
  train::MetricsCsv csv(out + "/" + e.run_id + "_metrics.csv");
  csv.row(e.run_id, e.method, e.d, e.n_train, e.seed, std::nullopt, std::nullopt, std::nullopt,
          finite_or_none(e.r.rmse_v), finite_or_none(e.r.rmse_q));
  train::write_curves(out + "/" + e.run_id + "_curves.csv", e.run_id, e.method, e.d, e.r);
  std::cout << e.run_id << ": RMSE_v = " << e.r.rmse_v;
  if (std::isfinite(e.r.rmse_q)) std::cout << ", RMSE_q = " << e.r.rmse_q;
  std::cout << "\n";
}

// Mean and unbiased sd of per-seed results, for sweep charts.
std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(xs.size() - 1))};
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);  // bit-reproducible reductions

  CLI::App app{"Velocity and log-density field reconstruction from partial radar observations"};
  app.require_subcommand(1);

  // generate
  struct {
    std::string out = "data";
    int n_train = 1000, n_test = 50, n_radars = 3, frames = 20, grid = 32;
    std::uint64_t seed = 0;
    double noise_sigma = 0.001;
    std::vector<std::string> d_tags = {"1", "2", "inf"};
    bool fixed_radars = false;
  } gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic dataset container");
  g->add_option("--out", gen.out, "Output directory");
  g->add_option("--n-train", gen.n_train, "Training sequences");
  g->add_option("--n-test", gen.n_test, "Test sequences");
  g->add_option("--n-radars", gen.n_radars, "Radars per sequence");
  g->add_option("--frames", gen.frames, "Frames per sequence");
  g->add_option("--grid", gen.grid, "Grid cells per side");
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--noise-sigma", gen.noise_sigma, "Observation noise sd");
  g->add_option("--d", gen.d_tags, "Range settings, e.g. --d 1 2 inf");
  g->add_flag("--fixed-radars", gen.fixed_radars, "Same radar placement for all sequences");

  // train
  struct {
    std::string data = "data", out = "runs", d = "2", method = "ours", run_id;
    int n_train = -1;
    train::TrainConfig cfg;
    bool no_physics = false;
  } tr;
  auto* t = app.add_subcommand("train", "Train a model and write checkpoint + metrics");
  t->add_option("--data", tr.data, "Dataset directory");
  t->add_option("--out", tr.out, "Artifact directory");
  t->add_option("--d", tr.d, "Range setting tag");
  t->add_option("--method", tr.method, "ours | vae")
      ->check(CLI::IsMember({"ours", "vae"}));
  t->add_option("--n-train", tr.n_train, "Training sequences to use (-1 = all)");
  t->add_option("--seed", tr.cfg.seed, "Training seed");
  t->add_option("--epochs", tr.cfg.max_epochs, "Epoch budget");
  t->add_option("--batch", tr.cfg.batch, "Sequences per step");
  t->add_option("--vae-batch", tr.cfg.vae_batch, "Frames per step (vae)");
  t->add_option("--lr", tr.cfg.lr, "Adam learning rate");
  t->add_option("--patience", tr.cfg.patience, "Early-stopping patience (epochs)");
  t->add_option("--lambda-physics", tr.cfg.lambda_physics, "Physics loss weight");
  t->add_flag("--no-physics", tr.no_physics, "Drop the physics term");
  t->add_flag("--learn-prior", tr.cfg.learn_prior, "Learn the latent prior");
  t->add_option("--run-id", tr.run_id, "Run identifier (default derived)");

  // evaluate
  struct {
    std::string data = "data", checkpoint, out = "runs", run_id;
    int samples = 10;
    std::uint64_t sample_seed = 7;
  } ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  e->add_option("--data", ev.data, "Dataset directory");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  e->add_option("--out", ev.out, "Artifact directory");
  e->add_option("--samples", ev.samples, "Posterior samples per frame");
  e->add_option("--sample-seed", ev.sample_seed, "Posterior sampling seed");
  e->add_option("--run-id", ev.run_id, "Run identifier (default from checkpoint)");

  // baseline
  struct {
    std::string data = "data", out = "runs", d = "2", run_id;
  } bl;
  auto* b = app.add_subcommand("baseline", "Radial-fit velocity baseline on the test split");
  b->add_option("--data", bl.data, "Dataset directory");
  b->add_option("--out", bl.out, "Artifact directory");
  b->add_option("--d", bl.d, "Range setting tag");
  b->add_option("--run-id", bl.run_id, "Run identifier");

  // sweep
  struct {
    std::string data = "data", out = "runs";
    std::vector<std::string> d_tags = {"2"};
    std::vector<int> n_trains = {200};
    std::vector<std::uint64_t> seeds = {1, 2};
    std::vector<std::string> methods = {"ours", "vae", "vvp"};
    train::TrainConfig cfg;
  } sw;
  auto* s = app.add_subcommand("sweep", "Train/evaluate a method x d x n_train x seed grid");
  s->add_option("--data", sw.data, "Dataset directory");
  s->add_option("--out", sw.out, "Artifact directory");
  s->add_option("--d", sw.d_tags, "Range setting tags");
  s->add_option("--n-train", sw.n_trains, "Training-set sizes");
  s->add_option("--seeds", sw.seeds, "Training seeds");
  s->add_option("--methods", sw.methods, "Any of: ours vae vvp");
  s->add_option("--epochs", sw.cfg.max_epochs, "Epoch budget");
  s->add_option("--batch", sw.cfg.batch, "Sequences per step");
  s->add_option("--patience", sw.cfg.patience, "Early-stopping patience");

  // plot
  struct {
    std::vector<std::string> curves;
    std::string summary, data, out = "plots";
    int seq = 0, frame = 0;
  } pl;
  auto* p = app.add_subcommand("plot", "Render SVG figures from CSVs or a dataset");
  p->add_option("--curves", pl.curves, "Per-frame curve CSVs");
  p->add_option("--summary", pl.summary, "Sweep summary CSV");
  p->add_option("--data", pl.data, "Dataset directory (field heatmaps)");
  p->add_option("--seq", pl.seq, "Test sequence index for heatmaps");
  p->add_option("--frame", pl.frame, "Frame index for heatmaps");
  p->add_option("--out", pl.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) {
      apply_out_env(g, gen.out);
      dataset::DatasetConfig cfg;
      cfg.sim.K = cfg.sim.L = gen.grid;
      cfg.sim.T = gen.frames;
      cfg.n_train = gen.n_train;
      cfg.n_test = gen.n_test;
      cfg.n_radars = gen.n_radars;
      cfg.noise_sigma = gen.noise_sigma;
      cfg.d_tags = gen.d_tags;
      cfg.fixed_radars = gen.fixed_radars;
      cfg.master_seed = gen.seed;
      const auto man = dataset::generate_dataset(cfg, gen.out);
      std::cout << "wrote " << man.sequences.size() << " sequences to " << gen.out
                << " (content hash " << man.content_hash << ")\n"
                << "normalization: v in [" << man.norm.v_min << ", " << man.norm.v_max
                << "], q in [" << man.norm.q_min << ", " << man.norm.q_max << "]\n";
    } else if (t->parsed()) {
      apply_out_env(t, tr.out);
      tr.cfg.physics = !tr.no_physics;
      const auto man = dataset::load_manifest(tr.data);
      const int n_use = tr.n_train < 0 ? static_cast<int>(man.split("train").size()) : tr.n_train;
      if (tr.run_id.empty())
        tr.run_id = tr.method + "_d" + tr.d + "_n" + std::to_string(n_use) + "_s" +
                    std::to_string(tr.cfg.seed);
      fs::create_directories(tr.out);
      const std::string ckpt = tr.out + "/" + tr.run_id + ".ckpt";
      train::MetricsCsv csv(tr.out + "/" + tr.run_id + "_train.csv");
      const auto outcome =
          tr.method == "ours"
              ? train::train_model(tr.data, man, tr.d, n_use, tr.cfg, ckpt, csv, tr.run_id)
              : train::train_vae(tr.data, man, tr.d, n_use, tr.cfg, ckpt, csv, tr.run_id);
      std::cout << tr.run_id << ": " << outcome.epochs_run << " epochs, best epoch "
                << outcome.best_epoch << " (validation " << outcome.best_val << "), checkpoint "
                << ckpt << "\n";
    } else if (e->parsed()) {
      apply_out_env(e, ev.out);
      const auto man = dataset::load_manifest(ev.data);
      const auto ar = checkpoint::load(ev.checkpoint);
      EvalRow row;
      row.method = ar.meta.at("method");
      row.d = ar.meta.at("d");
      row.n_train = std::stoi(ar.meta.at("n_train"));
      row.seed = std::stoull(ar.meta.at("seed"));
      row.run_id = ev.run_id.empty() ? ar.meta.at("run_id") + "_eval" : ev.run_id;
      row.r = row.method == "ours"
                  ? train::evaluate_model(ev.data, man, row.d, ev.checkpoint, ev.samples,
                                          ev.sample_seed)
                  : train::evaluate_vae(ev.data, man, row.d, ev.checkpoint);
      write_eval_outputs(ev.out, row);
    } else if (b->parsed()) {
      apply_out_env(b, bl.out);
      const auto man = dataset::load_manifest(bl.data);
      EvalRow row;
      row.method = "vvp";
      row.d = bl.d;
      row.run_id = bl.run_id.empty() ? "vvp_d" + bl.d : bl.run_id;
      row.r = train::evaluate_vvp(bl.data, man, bl.d);
      write_eval_outputs(bl.out, row);
    } else if (s->parsed()) {
      apply_out_env(s, sw.out);
      const auto man = dataset::load_manifest(sw.data);
      fs::create_directories(sw.out);
      train::MetricsCsv summary(sw.out + "/summary.csv");
      // method -> d -> n_train -> per-seed RMSEs
      std::map<std::string, std::map<std::string, std::map<int, std::vector<double>>>> all_v,
          all_q;
      for (const auto& d : sw.d_tags) {
        for (int n : sw.n_trains) {
          for (const auto& method : sw.methods) {
            if (method == "vvp") {
              auto r = train::evaluate_vvp(sw.data, man, d);
              summary.row("vvp_d" + d, "vvp", d, n, 0, std::nullopt, std::nullopt, std::nullopt,
                          finite_or_none(r.rmse_v), finite_or_none(r.rmse_q));
              all_v[method][d][n].push_back(r.rmse_v);
              std::cout << "vvp d=" << d << ": RMSE_v = " << r.rmse_v << "\n";
              continue;
            }
            for (auto seed : sw.seeds) {
              auto cfg = sw.cfg;
              cfg.seed = seed;
              const std::string run_id =
                  method + "_d" + d + "_n" + std::to_string(n) + "_s" + std::to_string(seed);
              const std::string ckpt = sw.out + "/" + run_id + ".ckpt";
              train::MetricsCsv csv(sw.out + "/" + run_id + "_train.csv");
              const auto outcome =
                  method == "ours"
                      ? train::train_model(sw.data, man, d, n, cfg, ckpt, csv, run_id)
                      : train::train_vae(sw.data, man, d, n, cfg, ckpt, csv, run_id);
              const auto r = method == "ours"
                                 ? train::evaluate_model(sw.data, man, d, ckpt)
                                 : train::evaluate_vae(sw.data, man, d, ckpt);
              summary.row(run_id, method, d, n, seed, outcome.best_epoch, std::nullopt,
                          std::nullopt, finite_or_none(r.rmse_v), finite_or_none(r.rmse_q));
              train::write_curves(sw.out + "/" + run_id + "_curves.csv", run_id, method, d, r);
              all_v[method][d][n].push_back(r.rmse_v);
              if (std::isfinite(r.rmse_q)) all_q[method][d][n].push_back(r.rmse_q);
              std::cout << run_id << ": RMSE_v = " << r.rmse_v << ", RMSE_q = " << r.rmse_q
                        << " (best epoch " << outcome.best_epoch << ")\n";
            }
          }
        }
      }
      // Data-efficiency charts, one per d and quantity.
      for (const auto& d : sw.d_tags) {
        for (const auto* which : {"v", "q"}) {
          const auto& all = std::string(which) == "v" ? all_v : all_q;
          std::vector<svgplot::Series> series;
          for (const auto& [method, by_d] : all) {
            auto it = by_d.find(d);
            if (it == by_d.end()) continue;
            svgplot::Series sr;
            sr.label = method;
            for (const auto& [n, xs] : it->second) {
              const auto [m, sd] = mean_sd(xs);
              sr.x.push_back(n);
              sr.y.push_back(m);
              sr.band.push_back(sd);
            }
            if (!sr.x.empty()) series.push_back(std::move(sr));
          }
          if (series.empty()) continue;
          svgplot::line_chart(sw.out + "/rmse_" + which + "_d" + d + ".svg",
                              std::string("Test RMSE_") + which + ", d = " + d,
                              "training sequences", std::string("RMSE_") + which, series,
                              /*log_x=*/sw.n_trains.size() > 1);
        }
      }
      std::cout << "summary written to " << sw.out << "/summary.csv\n";
    } else if (p->parsed()) {
      apply_out_env(p, pl.out);
      fs::create_directories(pl.out);
      for (const auto& path : pl.curves) {
        const auto tab = read_csv(path);
        const int ci_t = tab.col("t"), ci_rv = tab.col("rmse_v"), ci_rq = tab.col("rmse_q");
        const int ci_sv = tab.col("std_v"), ci_sq = tab.col("std_q");
        const std::string label =
            tab.rows.empty() ? "run" : tab.rows.front()[tab.col("method")];
        auto collect = [&](int col) {
          svgplot::Series sr;
          sr.label = label;
          for (const auto& row : tab.rows) {
            if (row[static_cast<std::size_t>(col)].empty()) continue;
            sr.x.push_back(std::stod(row[static_cast<std::size_t>(ci_t)]));
            sr.y.push_back(std::stod(row[static_cast<std::size_t>(col)]));
          }
          return sr;
        };
        const std::string stem = pl.out + "/" + fs::path(path).stem().string();
        std::vector<svgplot::Series> rmse;
        auto rv = collect(ci_rv);
        rv.label = label + " v";
        auto rq = collect(ci_rq);
        rq.label = label + " q";
        if (!rv.x.empty()) rmse.push_back(std::move(rv));
        if (!rq.x.empty()) rmse.push_back(std::move(rq));
        if (!rmse.empty())
          svgplot::line_chart(stem + "_rmse.svg", "Per-frame test RMSE", "frame", "RMSE", rmse);
        std::vector<svgplot::Series> stds;
        auto sv = collect(ci_sv);
        sv.label = label + " v";
        auto sq = collect(ci_sq);
        sq.label = label + " q";
        if (!sv.x.empty()) stds.push_back(std::move(sv));
        if (!sq.x.empty()) stds.push_back(std::move(sq));
        if (!stds.empty())
          svgplot::line_chart(stem + "_std.svg", "Posterior-sample std per frame", "frame",
                              "mean std", stds);
      }
      if (!pl.summary.empty()) {
        const auto tab = read_csv(pl.summary);
        const int ci_m = tab.col("method"), ci_d = tab.col("d"), ci_n = tab.col("n_train");
        const int ci_v = tab.col("RMSE_v"), ci_q = tab.col("RMSE_q");
        for (const auto* which : {"v", "q"}) {
          const int ci = std::string(which) == "v" ? ci_v : ci_q;
          // method|d -> n -> values
          std::map<std::string, std::map<int, std::vector<double>>> acc;
          for (const auto& row : tab.rows) {
            const auto& cell = row[static_cast<std::size_t>(ci)];
            if (cell.empty()) continue;
            acc[row[static_cast<std::size_t>(ci_m)] + " d=" + row[static_cast<std::size_t>(ci_d)]]
               [std::stoi(row[static_cast<std::size_t>(ci_n)])]
                   .push_back(std::stod(cell));
          }
          std::vector<svgplot::Series> series;
          bool log_x = false;
          for (const auto& [label, by_n] : acc) {
            svgplot::Series sr;
            sr.label = label;
            for (const auto& [n, xs] : by_n) {
              const auto [m, sd] = mean_sd(xs);
              sr.x.push_back(n);
              sr.y.push_back(m);
              sr.band.push_back(sd);
            }
            log_x = log_x || sr.x.size() > 1;
            series.push_back(std::move(sr));
          }
          if (!series.empty())
            svgplot::line_chart(pl.out + "/summary_rmse_" + which + ".svg",
                                std::string("Test RMSE_") + which, "training sequences",
                                std::string("RMSE_") + which, series, log_x);
        }
      }
      if (!pl.data.empty()) {
        const auto man = dataset::load_manifest(pl.data);
        const auto recs = man.split("test");
        if (pl.seq < 0 || pl.seq >= static_cast<int>(recs.size()))
          throw std::runtime_error("--seq out of range");
        const auto s = dataset::load_sequence(pl.data, man, *recs[static_cast<std::size_t>(pl.seq)],
                                              man.cfg.d_tags.front());
        if (pl.frame < 0 || pl.frame >= static_cast<int>(s.truth_v.size(0)))
          throw std::runtime_error("--frame out of range");
        const auto geom = man.geometry();
        const std::string stem =
            pl.out + "/seq" + std::to_string(pl.seq) + "_t" + std::to_string(pl.frame);
        svgplot::heatmap(stem + "_vx.svg", "vx (normalized)",
                         plane_to_vec(s.truth_v.index({pl.frame, 0})), geom.K, geom.L, true);
        svgplot::heatmap(stem + "_vy.svg", "vy (normalized)",
                         plane_to_vec(s.truth_v.index({pl.frame, 1})), geom.K, geom.L, true);
        svgplot::heatmap(stem + "_q.svg", "log-density (normalized)",
                         plane_to_vec(s.truth_q.index({pl.frame, 0})), geom.K, geom.L, false);
      }
      std::cout << "plots written to " << pl.out << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
