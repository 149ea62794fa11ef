// nngp command-line tool: parameter sweeps, depth traces, the 1-D demo,
// single classification runs, regime classification, and the Monte-Carlo
// verification suite. All outputs are deterministic for fixed flags + seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nngp/csv.hpp"
#include "nngp/data_io.hpp"
#include "nngp/experiments.hpp"
#include "nngp/gram_io.hpp"
#include "nngp/mc.hpp"
#include "nngp/svg.hpp"
#include "nngp/version.hpp"

using json = nlohmann::json;
using namespace nngp;

namespace {

// ---------------------------------------------------------------- parsing

/// Grid syntax: "a,b,c" or "lo:hi:step" (inclusive of hi up to rounding).
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
      throw std::invalid_argument("bad grid range '" + text + "', want lo:hi:step");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) values.push_back(lo + i * step);
    return values;
  }
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) values.push_back(std::stod(cell));
  }
  if (values.empty()) throw std::invalid_argument("empty grid '" + text + "'");
  return values;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) values.push_back(std::stoi(cell));
  }
  if (values.empty()) throw std::invalid_argument("empty list '" + text + "'");
  return values;
}

NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "mult") return NoiseMode::Multiplicative;
  if (s == "add") return NoiseMode::Additive;
  if (s == "none") return NoiseMode::None;
  throw std::invalid_argument("unknown noise mode '" + s + "' (want mult|add|none)");
}

/// "critical" resolves to 2/mu2_eff; anything else parses as a number.
double parse_sw2(const std::string& text, const NoiseSpec& noise) {
  if (text == "critical") return critical_params(noise).first;
  return std::stod(text);
}

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return format_double(v); }

// ------------------------------------------------------------ dataset I/O

struct LoadedData {
  ClassData train;
  ClassData test;
  int n_classes = 0;
};

LoadedData load_class_data(const std::string& dataset, const std::string& data_dir,
                           const std::string& train_csv, const std::string& test_csv, int n_train,
                           int n_test, NormMode norm) {
  namespace fs = std::filesystem;
  RawImageSet train_raw, test_raw;
  if (dataset == "mnist") {
    train_raw = load_mnist_idx((fs::path(data_dir) / "train-images-idx3-ubyte").string(),
                               (fs::path(data_dir) / "train-labels-idx1-ubyte").string(), n_train);
    test_raw = load_mnist_idx((fs::path(data_dir) / "t10k-images-idx3-ubyte").string(),
                              (fs::path(data_dir) / "t10k-labels-idx1-ubyte").string(), n_test);
  } else if (dataset == "cifar10") {
    std::vector<std::string> batches;
    for (int b = 1; b <= 5; ++b) {
      const fs::path p = fs::path(data_dir) / ("data_batch_" + std::to_string(b) + ".bin");
      if (fs::exists(p)) batches.push_back(p.string());
    }
    if (batches.empty()) throw std::runtime_error("no CIFAR-10 data_batch_*.bin under " + data_dir);
    train_raw = load_cifar10_bin(batches, n_train);
    test_raw = load_cifar10_bin({(fs::path(data_dir) / "test_batch.bin").string()}, n_test);
  } else if (dataset == "csv") {
    if (train_csv.empty() || test_csv.empty())
      throw std::runtime_error("csv dataset needs --train-csv and --test-csv");
    train_raw = load_csv(train_csv, n_train);
    test_raw = load_csv(test_csv, n_test);
  } else {
    throw std::runtime_error("unknown dataset '" + dataset + "'");
  }

  LoadedData out;
  const Dataset train_set = normalize_inputs(train_raw, norm);
  const Dataset test_set = normalize_inputs(test_raw, norm);
  out.train.inputs = train_set.inputs;
  out.train.labels = train_raw.labels;
  out.test.inputs = test_set.inputs;
  out.test.labels = test_raw.labels;
  int max_label = 0;
  for (int l : train_raw.labels) max_label = std::max(max_label, l);
  for (int l : test_raw.labels) max_label = std::max(max_label, l);
  out.n_classes = std::max(max_label + 1, dataset == "csv" ? 2 : 10);
  return out;
}

// --------------------------------------------------------------- commands

int cmd_sweep(const std::string& dataset, const std::string& data_dir,
              const std::string& train_csv, const std::string& test_csv, int n_train, int n_test,
              const std::string& depths_text, const std::string& sw2_grid_text,
              const std::string& mu2_grid_text, double sb2, const std::string& noise_text,
              double sigma_eps2, const std::string& normalize_text, const std::string& out_path,
              const std::string& plot_path, int threads, std::uint64_t seed) {
  SweepConfig cfg;
  cfg.sigma_w2_grid = parse_grid(sw2_grid_text);
  cfg.mu2_grid = parse_grid(mu2_grid_text);
  cfg.depths = parse_int_list(depths_text);
  cfg.sigma_b2 = sb2;
  cfg.noise_mode = parse_noise_mode(noise_text);
  cfg.sigma_eps2 = sigma_eps2;
  cfg.n_threads = threads;
  cfg.seed = seed;
  cfg.dataset_name = dataset;
  cfg.normalization_name = normalize_text;
  cfg.n_train = n_train;
  cfg.n_test = n_test;
  cfg.validate();

  const LoadedData data = load_class_data(dataset, data_dir, train_csv, test_csv, n_train, n_test,
                                          parse_norm_mode(normalize_text));
  const std::vector<SweepCell> cells = run_sweep(cfg, data.train, data.test, data.n_classes);

  Meta meta{{"command", "sweep"},
            {"dataset", dataset},
            {"n_train", std::to_string(n_train)},
            {"n_test", std::to_string(n_test)},
            {"depths", depths_text},
            {"sw2_grid", sw2_grid_text},
            {"mu2_grid", mu2_grid_text},
            {"sb2", fmt(sb2)},
            {"noise", noise_text},
            {"sigma_eps2", fmt(sigma_eps2)},
            {"normalize", normalize_text},
            {"seed", std::to_string(seed)}};

  CsvWriter csv(out_path, meta);
  csv.header("depth,mu2,sigma_w2,sigma_b2,status,accuracy,frob_norm,mean_var,dist_crit");
  int failures = 0;
  for (const auto& cell : cells) {
    csv.field(cell.depth)
        .field(cell.mu2)
        .field(cell.sigma_w2)
        .field(cell.sigma_b2)
        .field(to_string(cell.status))
        .field(cell.accuracy)
        .field(cell.frobenius_norm)
        .field(cell.mean_pred_variance)
        .field(cell.distance_to_critical);
    csv.end_row();
    failures += cell.status != CellStatus::OK;
  }
  csv.close();

  if (!plot_path.empty()) {
    for (int depth : cfg.depths) {
      std::vector<std::vector<double>> grid;
      for (double mu2 : cfg.mu2_grid) {
        std::vector<double> row;
        for (double sw2 : cfg.sigma_w2_grid) {
          for (const auto& cell : cells)
            if (cell.depth == depth && cell.mu2 == mu2 && cell.sigma_w2 == sw2)
              row.push_back(cell.accuracy);
        }
        grid.push_back(row);
      }
      std::string path = plot_path;
      if (cfg.depths.size() > 1) {
        const auto dot = path.rfind('.');
        path = path.substr(0, dot) + "_L" + std::to_string(depth) +
               (dot == std::string::npos ? "" : path.substr(dot));
      }
      svg::heatmap(path, cfg.sigma_w2_grid, cfg.mu2_grid, grid,
                   "test accuracy, depth " + std::to_string(depth), meta);
    }
  }

  std::cout << "wrote " << cells.size() << " cells to " << out_path;
  if (failures) std::cout << " (" << failures << " failed cells)";
  std::cout << "\n";
  return failures ? 2 : 0;
}

int cmd_limits(const std::string& sw2_text, double mu2, double sb2, const std::string& noise_text,
               bool boundary, const std::string& mu2_grid_text, const std::string& out_path) {
  NoiseSpec noise;
  noise.mode = parse_noise_mode(noise_text);
  noise.mu2 = noise.mode == NoiseMode::None ? 1.0 : mu2;

  if (boundary) {
    Meta meta{{"command", "limits"}, {"boundary", "1"}, {"mu2_grid", mu2_grid_text}};
    CsvWriter csv(out_path.empty() ? "boundary.csv" : out_path, meta);
    csv.header("mu2,sigma_w2_critical");
    for (double m : parse_grid(mu2_grid_text)) {
      csv.field(m).field(2.0 / m);
      csv.end_row();
    }
    csv.close();
    return 0;
  }

  KernelParams params{parse_sw2(sw2_text, noise), sb2, noise, 1};
  const RegimeLabel label = classify_regime(params);
  std::cout << label.describe() << "\n";
  return 0;
}

int cmd_trace(const std::string& sw2_grid_text, const std::string& mu2_grid_text, double sb2,
              const std::string& noise_text, int depth, double rho0, int dim,
              const std::string& dataset, const std::string& data_dir, int idx_a, int idx_b,
              const std::string& normalize_text, const std::string& out_path,
              const std::string& plot_path) {
  const NoiseMode mode = parse_noise_mode(noise_text);

  Eigen::VectorXd x, y;
  if (!dataset.empty()) {
    const LoadedData data = load_class_data(dataset, data_dir, "", "",
                                            std::max(idx_a, idx_b) + 1, 1,
                                            parse_norm_mode(normalize_text));
    x = data.train.inputs.row(idx_a).transpose();
    y = data.train.inputs.row(idx_b).transpose();
  } else {
    // synthetic unit-mean-square pair with prescribed correlation
    if (!(rho0 >= -1.0 && rho0 <= 1.0)) throw std::invalid_argument("--rho0 must be in [-1, 1]");
    if (dim < 2) throw std::invalid_argument("--dim must be at least 2");
    const double s = std::sqrt(static_cast<double>(dim));
    x = Eigen::VectorXd::Zero(dim);
    y = Eigen::VectorXd::Zero(dim);
    x(0) = s;
    y(0) = s * rho0;
    y(1) = s * std::sqrt(1.0 - rho0 * rho0);
  }

  std::vector<KernelParams> params_list;
  for (double mu2 : parse_grid(mu2_grid_text)) {
    NoiseSpec noise;
    noise.mode = mode;
    noise.mu2 = mode == NoiseMode::None ? 1.0 : mu2;
    for (const std::string& sw2_text : [&] {
           std::vector<std::string> cells;
           std::stringstream ss(sw2_grid_text);
           std::string cell;
           while (std::getline(ss, cell, ',')) cells.push_back(cell);
           return cells;
         }()) {
      params_list.push_back({parse_sw2(sw2_text, noise), sb2, noise, depth});
    }
  }

  const auto traces = depth_trace(x, y, params_list);

  Meta meta{{"command", "trace"},    {"sw2_grid", sw2_grid_text}, {"mu2_grid", mu2_grid_text},
            {"sb2", fmt(sb2)},       {"noise", noise_text},       {"depth", std::to_string(depth)},
            {"rho0", fmt(rho0)},     {"dim", std::to_string(dim)}};
  CsvWriter csv(out_path, meta);
  csv.header("mu2,sigma_w2,layer,k_xx,k_xy");
  for (const auto& trace : traces) {
    for (std::size_t l = 0; l < trace.k_xx.size(); ++l) {
      csv.field(trace.params.noise.mu2).field(trace.params.sigma_w2).field(static_cast<int>(l));
      csv.field(trace.k_xx[l]).field(trace.k_xy[l]);
      csv.end_row();
    }
  }
  csv.close();

  if (!plot_path.empty()) {
    std::vector<svg::Series> series;
    for (const auto& trace : traces) {
      std::string label = "sw2=" + fmt(trace.params.sigma_w2) + " mu2=" + fmt(trace.params.noise.mu2);
      series.push_back({label + " k_xx", trace.k_xx});
    }
    svg::lines(plot_path, series, "depth evolution of k(x,x)", meta);
  }
  return 0;
}

int cmd_demo1d(const std::string& mu2_list_text, double sb2, int depth, double grid_lo,
               double grid_hi, double grid_step, int n_train, double noise_sd, double sigma_eps2,
               int n_prior_samples, std::uint64_t seed, const std::string& out_path,
               const std::string& plot_path) {
  std::vector<double> lattice;
  for (double v = grid_lo; v <= grid_hi + 1e-12; v += grid_step) lattice.push_back(v);

  Demo1dOptions opts;
  opts.n_train = n_train;
  opts.noise_sd = noise_sd;
  opts.sigma_eps2 = sigma_eps2;
  opts.n_prior_samples = n_prior_samples;

  const auto bundles = run_1d_demo(parse_grid(mu2_list_text), sb2, depth, lattice, seed, opts);

  json doc;
  doc["meta"] = {{"tool", std::string("nngp ") + kVersion},
                 {"command", "demo1d"},
                 {"mu2_list", mu2_list_text},
                 {"sb2", sb2},
                 {"depth", depth},
                 {"grid_lo", grid_lo},
                 {"grid_hi", grid_hi},
                 {"grid_step", grid_step},
                 {"n_train", n_train},
                 {"noise_sd", noise_sd},
                 {"sigma_eps2", sigma_eps2},
                 {"n_prior_samples", n_prior_samples},
                 {"seed", seed}};
  doc["lattice"] = lattice;
  doc["bundles"] = json::array();
  for (const auto& bundle : bundles) {
    json b;
    b["mu2"] = bundle.mu2;
    b["sigma_w2"] = bundle.sigma_w2;
    b["train_x"] = std::vector<double>(bundle.train_x.begin(), bundle.train_x.end());
    b["train_y"] = std::vector<double>(bundle.train_y.begin(), bundle.train_y.end());
    b["fit_mean"] = std::vector<double>(bundle.fit_mean.begin(), bundle.fit_mean.end());
    b["fit_var"] = std::vector<double>(bundle.fit_var.begin(), bundle.fit_var.end());
    b["psi"] = std::vector<double>(bundle.psi.begin(), bundle.psi.end());
    json samples = json::array();
    for (Eigen::Index s = 0; s < bundle.prior_samples.rows(); ++s)
      samples.push_back(std::vector<double>(bundle.prior_samples.row(s).begin(),
                                            bundle.prior_samples.row(s).end()));
    b["prior_samples"] = samples;
    json gram_rows = json::array();
    for (Eigen::Index i = 0; i < bundle.gram.rows(); ++i)
      gram_rows.push_back(
          std::vector<double>(bundle.gram.row(i).begin(), bundle.gram.row(i).end()));
    b["gram"] = gram_rows;
    doc["bundles"].push_back(std::move(b));
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  out << doc.dump(1) << "\n";
  out.close();

  if (!plot_path.empty()) {
    std::vector<svg::Series> series;
    for (const auto& bundle : bundles) {
      series.push_back({"fit mu2=" + fmt(bundle.mu2),
                        std::vector<double>(bundle.fit_mean.begin(), bundle.fit_mean.end())});
    }
    Meta meta{{"command", "demo1d"}, {"seed", std::to_string(seed)}};
    svg::lines(plot_path, series, "posterior mean over the lattice", meta);
  }
  std::cout << "wrote " << bundles.size() << " bundles to " << out_path << "\n";
  return 0;
}

int cmd_classify(const std::string& dataset, const std::string& data_dir,
                 const std::string& train_csv, const std::string& test_csv, int n_train, int n_test,
                 const std::string& sw2_text, double mu2, double sb2,
                 const std::string& noise_text, int depth, double sigma_eps2,
                 const std::string& normalize_text, int threads, std::uint64_t seed,
                 const std::string& out_path) {
  NoiseSpec noise;
  noise.mode = parse_noise_mode(noise_text);
  noise.mu2 = noise.mode == NoiseMode::None ? 1.0 : mu2;
  KernelParams params{parse_sw2(sw2_text, noise), sb2, noise, depth};
  params.validate();

  const LoadedData data = load_class_data(dataset, data_dir, train_csv, test_csv, n_train, n_test,
                                          parse_norm_mode(normalize_text));
  const ClassifyResult r =
      run_classification(data.train, data.test, params, sigma_eps2, data.n_classes, threads);

  std::cout << "accuracy " << format_double(r.accuracy) << "\n"
            << "mean_pred_variance " << format_double(r.mean_pred_variance) << "\n"
            << "frobenius_norm " << format_double(r.frobenius_norm) << "\n"
            << "log_marginal " << format_double(r.log_marginal) << "\n";

  if (!out_path.empty()) {
    json doc;
    doc["meta"] = {{"tool", std::string("nngp ") + kVersion},
                   {"command", "classify"},
                   {"dataset", dataset},
                   {"n_train", n_train},
                   {"n_test", n_test},
                   {"sigma_w2", params.sigma_w2},
                   {"mu2", noise.mu2},
                   {"sb2", sb2},
                   {"noise", noise_text},
                   {"depth", depth},
                   {"sigma_eps2", sigma_eps2},
                   {"normalize", normalize_text},
                   {"seed", seed}};
    doc["accuracy"] = r.accuracy;
    doc["mean_pred_variance"] = r.mean_pred_variance;
    doc["frobenius_norm"] = r.frobenius_norm;
    doc["log_marginal"] = r.log_marginal;
    doc["jitter_used"] = r.jitter_used;
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << doc.dump(1) << "\n";
  }
  return 0;
}

int cmd_verify(long n_samples, int n_configs, int width, long n_networks, int depth,
               std::uint64_t seed, int threads) {
  int failures = 0;
  Rng rng(seed);

  std::printf("layer-step brackets (%d configs, %ld samples each):\n", n_configs, n_samples);
  for (int cfg = 0; cfg < n_configs; ++cfg) {
    KernelState s;
    s.k_xx = 0.2 + 2.0 * rng.uniform();
    s.k_yy = 0.2 + 2.0 * rng.uniform();
    s.k_xy = std::sqrt(s.k_xx * s.k_yy) * (2.0 * rng.uniform() - 1.0) * 0.95;
    KernelParams p{0.3 + 2.0 * rng.uniform(), rng.uniform(), NoiseSpec::none(), 1};
    const double analytic = step_offdiag(s, p);
    const McEstimate mc = mc_layer_expectation(s.k_xx, s.k_yy, s.k_xy, p.sigma_w2, p.sigma_b2,
                                               n_samples, seed * 1000 + cfg);
    const bool ok = std::abs(mc.estimate - analytic) <= 3.0 * mc.std_err;
    failures += !ok;
    if (!ok || cfg < 3)
      std::printf("  [%s] config %d: analytic %.6f mc %.6f +- %.6f\n", ok ? "PASS" : "FAIL", cfg,
                  analytic, mc.estimate, mc.std_err);
  }

  std::printf("finite-network Gram (width %d, depth %d, %ld networks):\n", width, depth,
              n_networks);
  const double s = std::sqrt(16.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(16), y = Eigen::VectorXd::Zero(16);
  x(0) = s;
  y(0) = s * 0.9;
  y(1) = s * std::sqrt(1.0 - 0.81);
  KernelParams p{2.0 / 1.25, 0.0, NoiseSpec::multiplicative(1.25), depth};
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  KernelState st;
  st.k_xx = base_kernel_self(xs, p.noise);
  st.k_yy = base_kernel_self(ys, p.noise);
  st.k_xy = base_kernel_cross(xs, ys);
  for (int l = 0; l < depth; ++l) st = step_state(st, p);
  const Eigen::Matrix2d emp =
      mc_finite_network_gram(x, y, width, p, n_networks, seed + 17, NoiseLaw::DropoutScaled, 16,
                             threads);
  const double diag_err = std::abs(emp(0, 0) - st.k_xx) / st.k_xx;
  const double off_err = std::abs(emp(0, 1) - st.k_xy) / std::abs(st.k_xy);
  const bool diag_ok = diag_err < 0.05;
  const bool off_ok = off_err < 0.05;
  failures += !diag_ok + !off_ok;
  std::printf("  [%s] diagonal: analytic %.6f empirical %.6f (rel err %.4f)\n",
              diag_ok ? "PASS" : "FAIL", st.k_xx, emp(0, 0), diag_err);
  std::printf("  [%s] off-diagonal: analytic %.6f empirical %.6f (rel err %.4f)\n",
              off_ok ? "PASS" : "FAIL", st.k_xy, emp(0, 1), off_err);

  std::printf("%s (%d failures)\n", failures ? "VERIFY FAILED" : "verify passed", failures);
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noise-regularised neural network Gaussian processes"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "key=value config file; explicit flags win");
  app.require_subcommand(1);

  // ---- sweep
  auto* sweep = app.add_subcommand("sweep", "grid sweep over (sigma_w2, mu2, depth)");
  std::string sw_dataset = "mnist", sw_data_dir, sw_train_csv, sw_test_csv;
  int sw_n_train = 1000, sw_n_test = 400;
  std::string sw_depths = "20", sw_sw2_grid = "1.0:2.0:0.1", sw_mu2_grid = "1.0,1.25,1.5,2.0";
  double sw_sb2 = 0.0, sw_sigma_eps2 = 1e-6;
  std::string sw_noise = "mult", sw_normalize = "unit_norm";
  std::string sw_out = "sweep.csv", sw_plot;
  int sw_threads = 0;
  std::uint64_t sw_seed = 0;
  sweep->add_option("--dataset", sw_dataset, "mnist|cifar10|csv");
  sweep->add_option("--data-dir", sw_data_dir, "dataset directory")->envname("NNGP_DATA_DIR");
  sweep->add_option("--train-csv", sw_train_csv, "train CSV (dataset=csv)");
  sweep->add_option("--test-csv", sw_test_csv, "test CSV (dataset=csv)");
  sweep->add_option("--n-train", sw_n_train);
  sweep->add_option("--n-test", sw_n_test);
  sweep->add_option("--depths", sw_depths, "comma list of depths");
  sweep->add_option("--sw2-grid", sw_sw2_grid, "comma list or lo:hi:step");
  sweep->add_option("--mu2-grid", sw_mu2_grid, "comma list or lo:hi:step");
  sweep->add_option("--sb2", sw_sb2);
  sweep->add_option("--noise", sw_noise, "mult|add");
  sweep->add_option("--sigma-eps2", sw_sigma_eps2);
  sweep->add_option("--normalize", sw_normalize, "none|unit_norm|center_scale");
  sweep->add_option("--out", sw_out);
  sweep->add_option("--plot", sw_plot, "optional heatmap SVG");
  sweep->add_option("--threads", sw_threads, "0 = all cores");
  sweep->add_option("--seed", sw_seed);

  // ---- limits
  auto* limits = app.add_subcommand("limits", "classify the depth limit of kernel parameters");
  std::string li_sw2 = "critical", li_noise = "mult";
  double li_mu2 = 1.0, li_sb2 = 0.0;
  bool li_boundary = false;
  std::string li_mu2_grid = "1.0:2.0:0.01", li_out;
  limits->add_option("--sw2", li_sw2, "number or 'critical'");
  limits->add_option("--mu2", li_mu2);
  limits->add_option("--sb2", li_sb2);
  limits->add_option("--noise", li_noise, "mult|add|none");
  limits->add_flag("--boundary", li_boundary, "emit critical boundary CSV instead");
  limits->add_option("--mu2-grid", li_mu2_grid, "grid for --boundary");
  limits->add_option("--out", li_out, "boundary CSV path");

  // ---- trace
  auto* trace = app.add_subcommand("trace", "depth traces of k(x,x) and k(x,x')");
  std::string tr_sw2_grid = "critical", tr_mu2_grid = "1.0,1.5,2.0", tr_noise = "mult";
  double tr_sb2 = 0.0, tr_rho0 = 0.9;
  int tr_depth = 100, tr_dim = 64, tr_idx_a = 0, tr_idx_b = 1;
  std::string tr_dataset, tr_data_dir, tr_normalize = "unit_norm";
  std::string tr_out = "trace.csv", tr_plot;
  trace->add_option("--sw2-grid", tr_sw2_grid, "comma list of values or 'critical'");
  trace->add_option("--mu2-grid", tr_mu2_grid);
  trace->add_option("--sb2", tr_sb2);
  trace->add_option("--noise", tr_noise);
  trace->add_option("--depth", tr_depth);
  trace->add_option("--rho0", tr_rho0, "input correlation for the synthetic pair");
  trace->add_option("--dim", tr_dim, "synthetic pair dimension");
  trace->add_option("--dataset", tr_dataset, "draw the pair from a dataset instead");
  trace->add_option("--data-dir", tr_data_dir)->envname("NNGP_DATA_DIR");
  trace->add_option("--idx-a", tr_idx_a);
  trace->add_option("--idx-b", tr_idx_b);
  trace->add_option("--normalize", tr_normalize);
  trace->add_option("--out", tr_out);
  trace->add_option("--plot", tr_plot);

  // ---- demo1d
  auto* demo = app.add_subcommand("demo1d", "1-D sinusoid demo at critical parameters");
  std::string de_mu2_list = "1.0,1.001,2.0";
  double de_sb2 = 0.05, de_grid_lo = -1.0, de_grid_hi = 2.0, de_grid_step = 0.05;
  int de_depth = 20, de_n_train = 4, de_samples = 5;
  double de_noise_sd = 0.1, de_sigma_eps2 = 0.01;
  std::uint64_t de_seed = 1;
  std::string de_out = "demo1d.json", de_plot;
  demo->add_option("--mu2-list", de_mu2_list);
  demo->add_option("--sb2", de_sb2);
  demo->add_option("--depth", de_depth);
  demo->add_option("--grid-lo", de_grid_lo);
  demo->add_option("--grid-hi", de_grid_hi);
  demo->add_option("--grid-step", de_grid_step);
  demo->add_option("--n-train", de_n_train);
  demo->add_option("--noise-sd", de_noise_sd, "observation noise on training targets");
  demo->add_option("--sigma-eps2", de_sigma_eps2, "regression noise used by the fit");
  demo->add_option("--n-prior-samples", de_samples);
  demo->add_option("--seed", de_seed);
  demo->add_option("--out", de_out);
  demo->add_option("--plot", de_plot);

  // ---- classify
  auto* classify = app.add_subcommand("classify", "single-configuration classification run");
  std::string cl_dataset = "mnist", cl_data_dir, cl_train_csv, cl_test_csv;
  int cl_n_train = 1000, cl_n_test = 400, cl_depth = 20, cl_threads = 0;
  std::string cl_sw2 = "critical", cl_noise = "mult", cl_normalize = "unit_norm", cl_out;
  double cl_mu2 = 1.0, cl_sb2 = 0.0, cl_sigma_eps2 = 1e-6;
  std::uint64_t cl_seed = 0;
  classify->add_option("--dataset", cl_dataset, "mnist|cifar10|csv");
  classify->add_option("--data-dir", cl_data_dir)->envname("NNGP_DATA_DIR");
  classify->add_option("--train-csv", cl_train_csv);
  classify->add_option("--test-csv", cl_test_csv);
  classify->add_option("--n-train", cl_n_train);
  classify->add_option("--n-test", cl_n_test);
  classify->add_option("--sw2", cl_sw2, "number or 'critical'");
  classify->add_option("--mu2", cl_mu2);
  classify->add_option("--sb2", cl_sb2);
  classify->add_option("--noise", cl_noise);
  classify->add_option("--depth", cl_depth);
  classify->add_option("--sigma-eps2", cl_sigma_eps2);
  classify->add_option("--normalize", cl_normalize);
  classify->add_option("--threads", cl_threads);
  classify->add_option("--seed", cl_seed);
  classify->add_option("--out", cl_out, "optional JSON summary");

  // ---- verify
  auto* verify = app.add_subcommand("verify", "Monte-Carlo verification of the kernel recursion");
  long ve_samples = 1000000, ve_networks = 3000;
  int ve_configs = 50, ve_width = 1024, ve_depth = 3, ve_threads = 0;
  std::uint64_t ve_seed = 12345;
  verify->add_option("--n-samples", ve_samples);
  verify->add_option("--n-configs", ve_configs);
  verify->add_option("--width", ve_width);
  verify->add_option("--n-networks", ve_networks);
  verify->add_option("--depth", ve_depth)->check(CLI::Range(1, 4));
  verify->add_option("--seed", ve_seed);
  verify->add_option("--threads", ve_threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sweep->parsed())
      return cmd_sweep(sw_dataset, sw_data_dir, sw_train_csv, sw_test_csv, sw_n_train, sw_n_test,
                       sw_depths, sw_sw2_grid, sw_mu2_grid, sw_sb2, sw_noise, sw_sigma_eps2,
                       sw_normalize, sw_out, sw_plot, sw_threads, sw_seed);
    if (limits->parsed())
      return cmd_limits(li_sw2, li_mu2, li_sb2, li_noise, li_boundary, li_mu2_grid, li_out);
    if (trace->parsed())
      return cmd_trace(tr_sw2_grid, tr_mu2_grid, tr_sb2, tr_noise, tr_depth, tr_rho0, tr_dim,
                       tr_dataset, tr_data_dir, tr_idx_a, tr_idx_b, tr_normalize, tr_out, tr_plot);
    if (demo->parsed())
      return cmd_demo1d(de_mu2_list, de_sb2, de_depth, de_grid_lo, de_grid_hi, de_grid_step,
                        de_n_train, de_noise_sd, de_sigma_eps2, de_samples, de_seed, de_out,
                        de_plot);
    if (classify->parsed())
      return cmd_classify(cl_dataset, cl_data_dir, cl_train_csv, cl_test_csv, cl_n_train, cl_n_test,
                          cl_sw2, cl_mu2, cl_sb2, cl_noise, cl_depth, cl_sigma_eps2, cl_normalize,
                          cl_threads, cl_seed, cl_out);
    if (verify->parsed())
      return cmd_verify(ve_samples, ve_configs, ve_width, ve_networks, ve_depth, ve_seed,
                        ve_threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
