#include "gpmil/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpmil/common.hpp"
#include "gpmil/metrics.hpp"
#include "gpmil/model_io.hpp"
#include "gpmil/predict.hpp"
#include "gpmil/verification.hpp"

namespace gpmil {

namespace {

constexpr std::uint64_t kTagBag = 0xBA6;
constexpr std::uint64_t kTagBenchRun = 0xCE11;
constexpr std::uint64_t kTagBenchSplit = 0x5317;

std::string format_prob(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

GsmDensity make_density(const RunConfig& rc) {
  if (rc.psi_family == "hs") return GsmDensity::hyperbolic_secant();
  if (rc.psi_family == "gamma") return GsmDensity::gamma_mix(rc.alpha, rc.beta);
  throw std::invalid_argument("psi must be 'hs' or 'gamma', got '" +
                              rc.psi_family + "'");
}

int cmd_gen(const RunConfig& rc) {
  const MilDataset ds = gen_synth(rc.synth);
  save_csv(rc.out_path, ds);
  std::cout << "wrote " << ds.num_instances() << " instances in "
            << ds.num_bags() << " bags to " << rc.out_path << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  MilDataset data = load_csv(rc.data_path);
  MilDataset val;
  bool have_val = false;
  if (!rc.val_path.empty()) {
    val = load_csv(rc.val_path);
    have_val = true;
    if (val.dim() != data.dim()) {
      throw data_error("validation features have dimension " +
                       std::to_string(val.dim()) + ", training has " +
                       std::to_string(data.dim()));
    }
  }

  std::optional<PcaTransform> pca;
  if (rc.pca_components > 0) {
    pca = fit_pca(data.X, rc.pca_components);
    data.X = apply_pca(*pca, data.X);
    if (have_val) val.X = apply_pca(*pca, val.X);
  }

  KernelParams kernel = rc.kernel;
  if (!rc.lengthscale_set) kernel.l = static_cast<double>(data.dim());

  const GsmDensity psi = make_density(rc);
  std::ostringstream log;
  TrainedModel model =
      train(data, have_val ? &val : nullptr, kernel, psi, rc.model, &log);
  if (pca.has_value()) model.pca = pca;

  std::cout << log.str();
  if (!rc.log_path.empty()) {
    std::ofstream lf(rc.log_path);
    if (!lf) throw data_error("cannot write '" + rc.log_path + "'");
    lf << log.str();
  }
  save_model(rc.model_path, model);
  std::cout << "model written to " << rc.model_path << " (best epoch "
            << model.best_epoch << "/" << model.epochs_run << ", "
            << model.monitor << "=" << model.best_score << ")\n";
  return 0;
}

int cmd_predict(const RunConfig& rc) {
  const TrainedModel model = load_model(rc.model_path);
  const MilDataset ds = load_csv(rc.data_path);
  const Eigen::MatrixXd X = model_features(model, ds.X);
  const Predictor pred(model);

  std::ofstream out(rc.out_path);
  if (!out) throw data_error("cannot write '" + rc.out_path + "'");
  out << "row_type,bag_id,instance,prob,std\n";
  for (int b = 0; b < ds.num_bags(); ++b) {
    const auto& members = ds.bags[b];
    Eigen::MatrixXd xb(members.size(), X.cols());
    for (std::size_t j = 0; j < members.size(); ++j) {
      xb.row(static_cast<Eigen::Index>(j)) = X.row(members[j]);
    }
    std::mt19937_64 rng(
        derive_seed(rc.model.seed, kTagBag, static_cast<std::uint64_t>(b)));
    const BagPrediction bp = pred.predict_bag(xb, rc.model.pred_samples, rng);
    out << "bag," << ds.bag_ids[b] << ",," << format_prob(bp.prob) << ","
        << format_prob(bp.prob_std) << "\n";
    for (std::size_t j = 0; j < members.size(); ++j) {
      out << "instance," << ds.bag_ids[b] << "," << members[j] << ","
          << format_prob(bp.instances[j].prob) << ","
          << format_prob(bp.instances[j].prob_std) << "\n";
    }
  }
  if (!out) throw data_error("write to '" + rc.out_path + "' failed");
  std::cout << "predictions written to " << rc.out_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  const TrainedModel model = load_model(rc.model_path);
  const MilDataset ds = load_csv(rc.data_path);
  const EvalReport rep =
      evaluate(model, ds, rc.model.pred_samples, rc.model.seed);
  const std::string json = report_to_json(rep);
  if (rc.out_path.empty()) {
    std::cout << json << "\n";
  } else {
    save_report(rc.out_path, rep);
    std::cout << "report written to " << rc.out_path << "\n";
  }
  return 0;
}

int cmd_verify(const RunConfig& rc) {
  const std::vector<CheckResult> results = run_all_checks(rc.verify_seed);
  bool all_passed = true;
  for (const CheckResult& r : results) {
    all_passed = all_passed && r.passed;
    std::cout << "check " << r.name << ": " << (r.passed ? "PASS" : "FAIL")
              << " observed=" << r.observed << " tolerance=" << r.tolerance
              << " (" << r.detail << ")\n";
  }
  if (!rc.out_path.empty()) {
    std::ofstream out(rc.out_path);
    if (!out) throw data_error("cannot write '" + rc.out_path + "'");
    out << "[\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const CheckResult& r = results[i];
      out << "  {\"name\": \"" << r.name << "\", \"passed\": "
          << (r.passed ? "true" : "false") << ", \"observed\": " << r.observed
          << ", \"tolerance\": " << r.tolerance << "}"
          << (i + 1 < results.size() ? "," : "") << "\n";
    }
    out << "]\n";
  }
  return all_passed ? 0 : 1;
}

namespace {

struct BenchCell {
  std::string family;
  int inducing = 0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
};

struct BenchRow {
  BenchCell cell;
  int split = 0;
  EvalReport rep;
  bool ok = false;
  std::string error;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

int cmd_bench(const RunConfig& rc) {
  const MilDataset full =
      rc.data_path.empty() ? gen_synth(rc.synth) : load_csv(rc.data_path);

  std::vector<BenchCell> cells;
  for (int m : rc.inducing_grid) {
    BenchCell hs;
    hs.family = "hs";
    hs.inducing = m;
    cells.push_back(hs);
  }
  for (int m : rc.inducing_grid) {
    for (double a : rc.alpha_grid) {
      for (double b : rc.beta_grid) {
        BenchCell g;
        g.family = "gamma";
        g.inducing = m;
        g.alpha = a;
        g.beta = b;
        cells.push_back(g);
      }
    }
  }

  const int runs = static_cast<int>(cells.size()) * rc.splits;
  std::vector<BenchRow> rows(static_cast<std::size_t>(runs));
  // Every run owns an RNG stream keyed by its flat index, so scheduling
  // cannot change any number.
#pragma omp parallel for schedule(dynamic)
  for (int run = 0; run < runs; ++run) {
    const int cell_idx = run / rc.splits;
    const int split_idx = run % rc.splits;
    BenchRow& row = rows[static_cast<std::size_t>(run)];
    row.cell = cells[static_cast<std::size_t>(cell_idx)];
    row.split = split_idx;
    try {
      const SplitResult split =
          stratified_split(full, rc.test_fraction,
                           derive_seed(rc.model.seed, kTagBenchSplit,
                                       static_cast<std::uint64_t>(split_idx)));
      ModelConfig cfg = rc.model;
      cfg.inducing = std::min<int>(row.cell.inducing,
                                   static_cast<int>(split.train.num_instances()));
      cfg.max_epochs = rc.bench_epochs;
      cfg.hyperopt_enabled = rc.bench_hyperopt;
      cfg.seed = derive_seed(rc.model.seed, kTagBenchRun,
                             static_cast<std::uint64_t>(run));
      KernelParams kernel = rc.kernel;
      if (!rc.lengthscale_set) kernel.l = static_cast<double>(full.dim());
      const GsmDensity psi =
          row.cell.family == "hs"
              ? GsmDensity::hyperbolic_secant()
              : GsmDensity::gamma_mix(row.cell.alpha, row.cell.beta);
      const TrainedModel model =
          train(split.train, nullptr, kernel, psi, cfg);
      row.rep = evaluate(model, split.test, cfg.pred_samples,
                         derive_seed(cfg.seed, kTagBag));
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }

  const std::string detail_path = rc.out_path + "_detail.csv";
  const std::string summary_path = rc.out_path + "_summary.csv";
  std::ofstream detail(detail_path);
  if (!detail) throw data_error("cannot write '" + detail_path + "'");
  detail << "model,inducing,alpha,beta,split,bag_auc,bag_accuracy,bag_f1,"
            "instance_auc,instance_accuracy,instance_f1\n";
  for (const BenchRow& row : rows) {
    if (!row.ok) {
      std::cerr << "bench cell " << row.cell.family << " M=" << row.cell.inducing
                << " split=" << row.split << " failed: " << row.error << "\n";
      continue;
    }
    detail << row.cell.family << "," << row.cell.inducing << ","
           << format_metric(row.cell.alpha) << "," << format_metric(row.cell.beta)
           << "," << row.split << "," << format_metric(row.rep.bag_auc) << ","
           << format_metric(row.rep.bag_accuracy) << ","
           << format_metric(row.rep.bag_f1) << ","
           << format_metric(row.rep.instance_auc.value_or(
                  std::numeric_limits<double>::quiet_NaN()))
           << ","
           << format_metric(row.rep.has_instance_metrics
                                ? row.rep.instance_accuracy
                                : std::numeric_limits<double>::quiet_NaN())
           << ","
           << format_metric(row.rep.has_instance_metrics
                                ? row.rep.instance_f1
                                : std::numeric_limits<double>::quiet_NaN())
           << "\n";
  }

  std::ofstream summary(summary_path);
  if (!summary) throw data_error("cannot write '" + summary_path + "'");
  summary << "model,inducing,alpha,beta,bag_auc_mean,bag_auc_std,"
             "bag_accuracy_mean,bag_accuracy_std,bag_f1_mean,bag_f1_std,"
             "instance_auc_mean,instance_auc_std\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> aucs, accs, f1s, iaucs;
    for (int s = 0; s < rc.splits; ++s) {
      const BenchRow& row = rows[c * static_cast<std::size_t>(rc.splits) +
                                 static_cast<std::size_t>(s)];
      if (!row.ok) continue;
      aucs.push_back(row.rep.bag_auc);
      accs.push_back(row.rep.bag_accuracy);
      f1s.push_back(row.rep.bag_f1);
      if (row.rep.instance_auc.has_value()) {
        iaucs.push_back(*row.rep.instance_auc);
      }
    }
    if (aucs.empty()) continue;
    const BenchCell& cell = cells[c];
    summary << cell.family << "," << cell.inducing << ","
            << format_metric(cell.alpha) << "," << format_metric(cell.beta)
            << "," << format_metric(mean_of(aucs)) << ","
            << format_metric(std_of(aucs)) << "," << format_metric(mean_of(accs))
            << "," << format_metric(std_of(accs)) << ","
            << format_metric(mean_of(f1s)) << "," << format_metric(std_of(f1s))
            << ",";
    if (iaucs.empty()) {
      summary << "nan,nan\n";
    } else {
      summary << format_metric(mean_of(iaucs)) << ","
              << format_metric(std_of(iaucs)) << "\n";
    }
  }
  std::cout << "bench tables written to " << detail_path << " and "
            << summary_path << "\n";
  return 0;
}

namespace {

void add_model_options(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--inducing", rc.model.inducing, "number of inducing points");
  sub->add_option("--H", rc.model.H, "bag-likelihood strength");
  sub->add_option("--seed", rc.model.seed, "base RNG seed");
  sub->add_option("--samples", rc.model.pred_samples,
                  "latent samples per prediction");
  sub->add_option("--epochs", rc.model.max_epochs, "maximum training epochs");
  sub->add_option("--patience", rc.model.patience,
                  "epochs without improvement before stopping");
  sub->add_option("--mc-samples", rc.model.mc_samples,
                  "Monte Carlo samples in the hyperparameter objective");
  sub->add_option("--rff", rc.model.rff_features, "random Fourier features");
  sub->add_flag("--hyperopt,!--no-hyperopt", rc.model.hyperopt_enabled,
                "optimize kernel hyperparameters during training");
  sub->add_option("--hyperopt-steps", rc.model.hyperopt_steps,
                  "ascent steps per epoch");
  sub->add_option("--hyperopt-rate", rc.model.hyperopt_rate, "ascent rate");
  sub->add_option("--psi", rc.psi_family, "density family: hs or gamma")
      ->check(CLI::IsMember({"hs", "gamma"}));
  sub->add_option("--alpha", rc.alpha, "GammaMix shape");
  sub->add_option("--beta", rc.beta, "GammaMix rate");
  sub->add_option("--kernel-v", rc.kernel.v, "kernel signal variance");
  sub->add_option("--kernel-l", rc.kernel.l, "kernel lengthscale")
      ->each([&rc](const std::string&) { rc.lengthscale_set = true; });
  sub->add_option_function<std::string>(
         "--norm-mode",
         [&rc](const std::string& s) {
           rc.kernel.norm_mode =
               s == "squared" ? NormMode::kSquared : NormMode::kUnsquared;
         },
         "kernel exponent norm: squared or unsquared")
      ->check(CLI::IsMember({"squared", "unsquared"}));
}

void add_synth_options(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--bags", rc.synth.num_bags, "number of bags");
  sub->add_option("--bag-size", rc.synth.bag_size, "instances per bag");
  sub->add_option("--pos-min", rc.synth.min_positives,
                  "minimum positives per positive bag");
  sub->add_option("--pos-max", rc.synth.max_positives,
                  "maximum positives per positive bag");
  sub->add_option("--dim", rc.synth.dim, "feature dimension");
  sub->add_option("--separation", rc.synth.separation,
                  "positive-class mean shift");
  sub->add_option("--fraction", rc.synth.positive_fraction,
                  "fraction of positive bags");
  sub->add_option("--gen-seed", rc.synth.seed, "generator seed");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  RunConfig rc;
  CLI::App app{"Sparse variational GP classifier for bags of instances"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  add_synth_options(gen, rc);
  gen->add_option("--out", rc.out_path, "output CSV path")->required();

  CLI::App* tr = app.add_subcommand("train", "train a model on a bag CSV");
  tr->add_option("--data", rc.data_path, "training CSV")->required();
  tr->add_option("--val", rc.val_path, "validation CSV for early stopping");
  tr->add_option("--model-out", rc.model_path, "model file to write")
      ->required();
  tr->add_option("--log", rc.log_path, "also write the epoch log here");
  tr->add_option("--pca", rc.pca_components,
                 "project features to this many principal axes");
  add_model_options(tr, rc);

  CLI::App* pr = app.add_subcommand("predict", "write per-bag and per-instance "
                                               "probabilities for a CSV");
  pr->add_option("--model", rc.model_path, "model file")->required();
  pr->add_option("--data", rc.data_path, "input CSV")->required();
  pr->add_option("--out", rc.out_path, "output predictions CSV")->required();
  pr->add_option("--samples", rc.model.pred_samples,
                 "latent samples per prediction");
  pr->add_option("--seed", rc.model.seed, "prediction RNG seed");

  CLI::App* ev = app.add_subcommand("eval", "score a model against a labeled CSV");
  ev->add_option("--model", rc.model_path, "model file")->required();
  ev->add_option("--data", rc.data_path, "labeled CSV")->required();
  ev->add_option("--out", rc.out_path, "report JSON path (stdout if absent)");
  ev->add_option("--samples", rc.model.pred_samples,
                 "latent samples per prediction");
  ev->add_option("--seed", rc.model.seed, "prediction RNG seed");

  CLI::App* vf = app.add_subcommand("verify", "run the numeric property checks");
  vf->add_option("--seed", rc.verify_seed, "seed for randomized checks");
  vf->add_option("--out", rc.out_path, "machine-readable results JSON");

  CLI::App* be = app.add_subcommand(
      "bench", "sweep the model grid over seeded splits and tabulate metrics");
  be->add_option("--data", rc.data_path,
                 "dataset CSV (omit to use a synthetic one)");
  add_synth_options(be, rc);
  be->add_option("--out", rc.out_path, "output prefix for the CSV tables")
      ->required();
  be->add_option("--splits", rc.splits, "number of seeded splits");
  be->add_option("--test-fraction", rc.test_fraction, "test share per split");
  be->add_option("--inducing-grid", rc.inducing_grid,
                 "inducing point counts to sweep")
      ->delimiter(',');
  be->add_option("--alpha-grid", rc.alpha_grid, "GammaMix shapes to sweep")
      ->delimiter(',');
  be->add_option("--beta-grid", rc.beta_grid, "GammaMix rates to sweep")
      ->delimiter(',');
  be->add_option("--epochs", rc.bench_epochs, "epochs per cell");
  be->add_flag("--hyperopt", rc.bench_hyperopt,
               "enable hyperparameter optimization per cell");
  be->add_option("--seed", rc.model.seed, "base seed");
  be->add_option("--samples", rc.model.pred_samples,
                 "latent samples per prediction");
  be->add_option("--kernel-v", rc.kernel.v, "kernel signal variance");
  be->add_option("--kernel-l", rc.kernel.l, "kernel lengthscale")
      ->each([&rc](const std::string&) { rc.lengthscale_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(rc);
    if (tr->parsed()) return cmd_train(rc);
    if (pr->parsed()) return cmd_predict(rc);
    if (ev->parsed()) return cmd_eval(rc);
    if (vf->parsed()) return cmd_verify(rc);
    if (be->parsed()) return cmd_bench(rc);
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace gpmil
