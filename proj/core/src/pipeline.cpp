#include "svreg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "svreg/interp.hpp"
#include "svreg/io.hpp"
#include "svreg/sgld.hpp"

namespace svreg {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail("cannot create directory " + dir + ": " + ec.message());
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail("cannot open " + path);
  out << text;
}

void echo_config(const RunConfig& cfg, const std::string& outdir) {
  write_text(outdir + "/config.txt", config_echo(cfg));
}

std::string chain_dir(const std::string& outdir, int chain) {
  return outdir + "/samples/chain" + std::to_string(chain);
}

std::string sample_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05d.mvf", idx);
  return buf;
}

}  // namespace

RegistrationModel make_model(const RunConfig& cfg, const ScalarField& fixed,
                             const ScalarField& moving) {
  cfg.validate();

  LikelihoodState like;
  like.mixture = MixtureParams::default_init(cfg.gmm_components);
  like.window = cfg.window;
  like.alpha = 1.0;

  LikelihoodHyperpriors like_hp;
  like_hp.kappa = cfg.kappa;
  like_hp.mu_beta = cfg.mu_beta;
  like_hp.sigma_beta = cfg.sigma_beta;

  RegulariserState reg;
  reg.mode = cfg.reg_mode_enum();
  reg.nu = degrees_of_freedom(fixed.grid);
  reg.lambda_reg = cfg.lambda_reg;
  reg.mu_chi2 = init_mu_chi2(reg.nu, cfg.lambda_init);
  reg.sigma_chi2 = std::exp(0.5 * cfg.eta);

  RegulariserHyperpriors reg_hp;
  reg_hp.lambda_init = cfg.lambda_init;
  reg_hp.eta = cfg.eta;
  reg_hp.varsigma = cfg.varsigma;

  SvfConfig svf{cfg.svf_steps};
  RegistrationEnergy energy(fixed, moving, like, reg, svf,
                            cfg.parametrisation_enum(), cfg.bspline_spacing);
  SobolevConfig sobolev{cfg.sobolev_width, cfg.sobolev_lambda};
  return RegistrationModel(std::move(energy), like_hp, reg_hp, sobolev,
                           cfg.smooth_samples, cfg.smooth_gradients, cfg.lr_gmm,
                           cfg.lr_reg);
}

SynthData run_synth_driver(const RunConfig& cfg, const std::string& outdir) {
  ensure_dir(outdir);
  SynthData data = synthesize_pair(cfg);
  write_field(outdir + "/fixed.mvf", data.fixed);
  write_field(outdir + "/moving.mvf", data.moving);
  write_field(outdir + "/fixed_labels.mvf", data.fixed_labels);
  write_field(outdir + "/moving_labels.mvf", data.moving_labels);
  write_field(outdir + "/gt_velocity.mvf", data.gt_velocity);
  write_field(outdir + "/gt_displacement.mvf", data.gt_displacement);
  echo_config(cfg, outdir);
  return data;
}

ViRunOutputs run_vi_driver(const RunConfig& cfg, const ScalarField& fixed,
                           const ScalarField& moving, const std::string& outdir) {
  ensure_dir(outdir);
  RegistrationModel model = make_model(cfg, fixed, moving);
  const int L = cfg.gmm_components;

  ViConfig vi;
  vi.iters = cfg.vi_iters;
  vi.rank = cfg.rank;
  vi.lr_posterior = cfg.lr_posterior;
  vi.lr_gmm = cfg.lr_gmm;
  vi.lr_reg = cfg.lr_reg;
  vi.lr_decay = cfg.lr_decay;
  vi.sigma_init = cfg.sigma_init;
  vi.factor_init = cfg.u_init;
  vi.seed = Rng::derive(cfg.seed, 1);

  CsvWriter elbo_csv(outdir + "/elbo_trace.csv");
  elbo_csv.header({"iter", "elbo", "energy_data", "energy_reg", "entropy"});
  CsvWriter hyper_csv(outdir + "/hyper_trace.csv");
  {
    std::vector<std::string> cols{"iter", "alpha", "chi2", "mu_chi2",
                                  "sigma_chi2"};
    for (int l = 0; l < L; ++l) cols.push_back("beta" + std::to_string(l));
    for (int l = 0; l < L; ++l) cols.push_back("rho" + std::to_string(l));
    hyper_csv.header(cols);
  }

  auto on_iteration = [&](int iter, const ViTraceRow& row) {
    elbo_csv.row({static_cast<double>(iter), row.elbo, row.energy_data,
                  row.energy_reg, row.entropy});
    const auto& like = model.energy().likelihood();
    const auto& reg = model.energy().regulariser();
    std::vector<double> vals{static_cast<double>(iter), like.alpha,
                             model.last_chi2(), reg.mu_chi2, reg.sigma_chi2};
    for (int l = 0; l < L; ++l) vals.push_back(like.mixture.precisions[l]);
    for (int l = 0; l < L; ++l) vals.push_back(like.mixture.proportions[l]);
    hyper_csv.row(vals);
  };

  ViResult res = run_vi(model, vi, on_iteration);

  const GridSpec& pg = model.energy().parameter_grid();
  VectorField mean(pg), sigma(pg);
  std::copy(res.q.mean.begin(), res.q.mean.end(), mean.values.begin());
  std::copy(res.q.sigma.begin(), res.q.sigma.end(), sigma.values.begin());
  write_field(outdir + "/q_mean.mvf", mean);
  write_field(outdir + "/q_sigma.mvf", sigma);
  for (int r = 0; r < res.q.rank; ++r) {
    VectorField col(pg);
    for (std::size_t p = 0; p < res.q.dim; ++p)
      col.values[p] = res.q.factor[p * res.q.rank + r];
    write_field(outdir + "/q_factor" + std::to_string(r) + ".mvf", col);
  }

  // fitted hyperparameters, exact-round-trip formatting
  {
    const auto& like = model.energy().likelihood();
    const auto& reg = model.energy().regulariser();
    std::string s;
    s += "mu_chi2 = " + format_double(reg.mu_chi2) + "\n";
    s += "sigma_chi2 = " + format_double(reg.sigma_chi2) + "\n";
    for (int l = 0; l < L; ++l)
      s += "beta" + std::to_string(l) + " = " +
           format_double(like.mixture.precisions[l]) + "\n";
    for (int l = 0; l < L; ++l)
      s += "rho" + std::to_string(l) + " = " +
           format_double(like.mixture.proportions[l]) + "\n";
    write_text(outdir + "/fitted.txt", s);
  }
  echo_config(cfg, outdir);

  ViRunOutputs out;
  out.q = std::move(res.q);
  out.iters_run = res.iters_run;
  out.final_elbo = res.trace.empty() ? 0.0 : res.trace.back().elbo;
  return out;
}

PosteriorBundle load_posterior(const std::string& vi_dir) {
  PosteriorBundle b;
  VectorField mean = read_vector_field(vi_dir + "/q_mean.mvf");
  VectorField sigma = read_vector_field(vi_dir + "/q_sigma.mvf");
  check(mean.grid == sigma.grid, "load_posterior: grid mismatch");
  const std::size_t P = mean.values.size();

  std::vector<VectorField> cols;
  for (int r = 0;; ++r) {
    const std::string path = vi_dir + "/q_factor" + std::to_string(r) + ".mvf";
    if (!fs::exists(path)) break;
    cols.push_back(read_vector_field(path));
  }
  b.q.dim = P;
  b.q.rank = static_cast<int>(cols.size());
  b.q.mean = mean.values;
  b.q.sigma = sigma.values;
  b.q.factor.resize(P * cols.size());
  for (std::size_t r = 0; r < cols.size(); ++r)
    for (std::size_t p = 0; p < P; ++p)
      b.q.factor[p * cols.size() + r] = cols[r].values[p];
  b.q.validate();

  // fitted hyperparameters
  std::ifstream in(vi_dir + "/fitted.txt");
  if (!in) fail("load_posterior: missing fitted.txt in " + vi_dir);
  std::string line;
  std::vector<double> betas, rhos;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    const double val = std::stod(line.substr(eq + 1));
    if (key == "mu_chi2") b.mu_chi2 = val;
    else if (key == "sigma_chi2") b.sigma_chi2 = val;
    else if (key.rfind("beta", 0) == 0) betas.push_back(val);
    else if (key.rfind("rho", 0) == 0) rhos.push_back(val);
  }
  b.mixture.precisions = std::move(betas);
  b.mixture.proportions = std::move(rhos);
  // proportions may carry tiny rounding from the round trip; renormalise
  double sum = 0.0;
  for (double r : b.mixture.proportions) sum += r;
  check(sum > 0.0, "load_posterior: bad proportions");
  for (double& r : b.mixture.proportions) r /= sum;
  b.mixture.validate();
  return b;
}

SgldInit sgld_init_from_string(const std::string& s) {
  if (s == "vi") return SgldInit::Vi;
  if (s == "zero") return SgldInit::Zero;
  if (s == "randn") return SgldInit::Randn;
  fail("sgld init must be one of vi|zero|randn, got '" + s + "'");
}

namespace {

std::vector<double> chain_precond(const PosteriorBundle* posterior,
                                  std::size_t dim) {
  std::vector<double> a;
  if (posterior) {
    a.resize(dim);
    for (std::size_t p = 0; p < dim; ++p)
      a[p] = posterior->q.sigma[p] * posterior->q.sigma[p];
  }
  return a;
}

std::vector<double> chain_init_state(const RunConfig& cfg,
                                     const PosteriorBundle* posterior,
                                     SgldInit init, std::size_t dim, int chain) {
  std::vector<double> w0(dim, 0.0);
  Rng rng(Rng::derive(cfg.seed, 200 + static_cast<std::uint64_t>(chain)));
  if (init == SgldInit::Vi) {
    sample_one(posterior->q, rng, w0);
  } else if (init == SgldInit::Randn) {
    for (double& v : w0) v = rng.normal();
  }
  return w0;
}

// The step-size rule: keep halving tau until a short pilot chain keeps every
// checked transformation diffeomorphic.
double calibrate_tau(const RunConfig& cfg, const ScalarField& fixed,
                     const ScalarField& moving,
                     const PosteriorBundle* posterior, SgldInit init,
                     double base_tau) {
  double tau = base_tau;
  for (int trial = 0; trial < 6; ++trial, tau *= 0.5) {
    RegistrationModel model = make_model(cfg, fixed, moving);
    if (posterior) {
      model.energy().likelihood().mixture = posterior->mixture;
      model.energy().regulariser().mu_chi2 = posterior->mu_chi2;
      model.energy().regulariser().sigma_chi2 = posterior->sigma_chi2;
    }
    SgldConfig pilot;
    pilot.tau = tau;
    pilot.burn_in = 2000;
    pilot.thin = 100;
    pilot.retain = 5;
    pilot.noise = cfg.sgld_noise;
    pilot.saem_decay = cfg.lr_decay;
    pilot.lr_gmm = cfg.lr_gmm;
    pilot.lr_reg = cfg.lr_reg;
    pilot.seed = Rng::derive(cfg.seed, 999);
    pilot.trace_every = 0;
    pilot.precond = chain_precond(posterior, model.size());

    std::vector<double> w0 = chain_init_state(cfg, posterior, init, model.size(), 0);
    SgldResult res = run_sgld(model, std::move(w0), pilot);

    std::size_t folds = 0;
    const GridSpec& pg = model.energy().parameter_grid();
    for (const auto& s : res.samples) {
      VectorField wf(pg);
      std::copy(s.begin(), s.end(), wf.values.begin());
      const VectorField disp =
          velocity_to_inverse_displacement(cfg, fixed.grid, wf);
      const ScalarField det = jacobian_determinant(disp);
      for (double v : det.values) folds += v <= 0.0;
    }
    if (folds == 0) return tau;
  }
  return tau;
}

}  // namespace

SgldRunOutputs run_sgld_driver(const RunConfig& cfg_in, const ScalarField& fixed,
                               const ScalarField& moving,
                               const PosteriorBundle* posterior, SgldInit init,
                               const std::string& outdir) {
  cfg_in.validate();
  ensure_dir(outdir);
  check(init != SgldInit::Vi || posterior != nullptr,
        "run_sgld_driver: vi initialisation needs a posterior");

  RunConfig cfg = cfg_in;
  if (cfg.tau_calibrate) {
    cfg.tau = calibrate_tau(cfg, fixed, moving, posterior, init,
                            cfg_in.resolved_tau());
    cfg.tau_explicit = true;
    cfg.tau_calibrate = false;
  }

  const int n_chains = cfg.chains;
  std::vector<SgldRunOutputs> per_chain(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);

  auto run_chain = [&](int chain) {
    try {
      RegistrationModel model = make_model(cfg, fixed, moving);
      const std::size_t P = model.size();
      if (posterior) {
        check(posterior->q.dim == P, "run_sgld_driver: posterior size mismatch");
        // continue the hyperparameter updates from the fitted values
        model.energy().likelihood().mixture = posterior->mixture;
        model.energy().regulariser().mu_chi2 = posterior->mu_chi2;
        model.energy().regulariser().sigma_chi2 = posterior->sigma_chi2;
      }

      SgldConfig scfg;
      scfg.tau = cfg.resolved_tau();
      scfg.burn_in = cfg.burn_in;
      scfg.thin = cfg.thin;
      scfg.retain = cfg.samples / n_chains +
                    (chain < cfg.samples % n_chains ? 1 : 0);
      scfg.noise = cfg.sgld_noise;
      scfg.saem_decay = cfg.lr_decay;
      scfg.lr_gmm = cfg.lr_gmm;
      scfg.lr_reg = cfg.lr_reg;
      scfg.seed = Rng::derive(cfg.seed, 100 + static_cast<std::uint64_t>(chain));
      scfg.trace_every = cfg.trace_every;
      scfg.precond = chain_precond(posterior, P);

      std::vector<double> w0 = chain_init_state(cfg, posterior, init, P, chain);

      const std::string cdir = chain_dir(outdir, chain);
      ensure_dir(cdir);
      const int L = cfg.gmm_components;
      CsvWriter trace(outdir + "/trace_chain" + std::to_string(chain) + ".csv");
      {
        std::vector<std::string> cols{"iter",   "energy_data", "energy_reg",
                                      "alpha",  "chi2",        "mu_chi2",
                                      "sigma_chi2"};
        for (int l = 0; l < L; ++l) cols.push_back("beta" + std::to_string(l));
        for (int l = 0; l < L; ++l) cols.push_back("rho" + std::to_string(l));
        trace.header(cols);
      }
      auto on_trace = [&](long iter, const SgldTraceRow& row) {
        const auto& like = model.energy().likelihood();
        const auto& reg = model.energy().regulariser();
        std::vector<double> vals{static_cast<double>(iter), row.energy_data,
                                 row.energy_reg, like.alpha, model.last_chi2(),
                                 reg.mu_chi2, reg.sigma_chi2};
        for (int l = 0; l < L; ++l) vals.push_back(like.mixture.precisions[l]);
        for (int l = 0; l < L; ++l) vals.push_back(like.mixture.proportions[l]);
        trace.row(vals);
      };

      SgldResult res = run_sgld(model, std::move(w0), scfg, on_trace);

      const GridSpec& pg = model.energy().parameter_grid();
      per_chain[chain].samples.reserve(res.samples.size());
      for (std::size_t i = 0; i < res.samples.size(); ++i) {
        VectorField f(pg);
        std::copy(res.samples[i].begin(), res.samples[i].end(),
                  f.values.begin());
        write_field(cdir + "/" + sample_name(static_cast<int>(i)), f);
        per_chain[chain].samples.push_back(std::move(f));
      }
    } catch (...) {
      errors[chain] = std::current_exception();
    }
  };

  if (n_chains == 1) {
    run_chain(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_chains);
    for (int c = 0; c < n_chains; ++c) threads.emplace_back(run_chain, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  echo_config(cfg, outdir);
  SgldRunOutputs out;
  for (auto& pc : per_chain)
    for (auto& s : pc.samples) out.samples.push_back(std::move(s));
  return out;
}

std::vector<VectorField> load_samples(const std::string& run_dir) {
  std::vector<VectorField> out;
  const fs::path base = fs::path(run_dir) / "samples";
  check(fs::exists(base), "load_samples: no samples/ in " + run_dir);
  std::vector<fs::path> chain_dirs;
  for (const auto& e : fs::directory_iterator(base))
    if (e.is_directory()) chain_dirs.push_back(e.path());
  std::sort(chain_dirs.begin(), chain_dirs.end());
  for (const auto& cd : chain_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cd))
      if (e.path().extension() == ".mvf") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_vector_field(f.string()));
  }
  check(!out.empty(), "load_samples: no sample files in " + run_dir);
  return out;
}

VectorField velocity_to_inverse_displacement(const RunConfig& cfg,
                                             const GridSpec& image_grid,
                                             const VectorField& velocity) {
  const VectorField* dense = &velocity;
  VectorField storage;
  if (cfg.parametrisation_enum() == Parametrisation::Bspline) {
    storage = bspline_to_dense(velocity, cfg.bspline_spacing, image_grid);
    dense = &storage;
  }
  VectorField neg(dense->grid);
  for (std::size_t i = 0; i < neg.values.size(); ++i)
    neg.values[i] = -dense->values[i];
  return exponentiate(neg, SvfConfig{cfg.svf_steps});
}

MetricsSummary run_metrics_driver(const RunConfig& cfg,
                                  const LabelField& fixed_labels,
                                  const LabelField& moving_labels,
                                  const std::vector<VectorField>& velocity_samples,
                                  const std::string& outdir) {
  ensure_dir(outdir);
  check(!velocity_samples.empty(), "run_metrics_driver: no samples");

  std::vector<VectorField> disps;
  disps.reserve(velocity_samples.size());
  for (const auto& v : velocity_samples)
    disps.push_back(
        velocity_to_inverse_displacement(cfg, fixed_labels.grid, v));

  MetricsSummary out;
  out.rows = structure_report(fixed_labels, moving_labels, disps);
  out.jacobian = jacobian_report(disps);
  out.uncertainty = displacement_uncertainty(disps);
  out.r_udul = out.rows.size() >= 3 ? pearson_udul(out.rows) : 0.0;

  double dsum = 0.0, isum = 0.0;
  for (const auto& r : out.rows) {
    dsum += r.dice_mean;
    isum += dice(fixed_labels, moving_labels, r.label);
  }
  const double nl = static_cast<double>(out.rows.size());
  out.mean_dice = dsum / nl;
  out.identity_dice = isum / nl;

  CsvWriter structures(outdir + "/structures.csv");
  structures.header({"label", "voxels", "dice_mean", "dice_std", "asd_mean",
                     "asd_std", "u_d", "u_l"});
  for (const auto& r : out.rows)
    structures.row({static_cast<double>(r.label),
                    static_cast<double>(r.voxels), r.dice_mean, r.dice_std,
                    r.asd_mean, r.asd_std, r.u_d, r.u_l});

  CsvWriter jac(outdir + "/jacobian.csv");
  jac.header({"mean_count", "std_count", "percent"});
  jac.row({out.jacobian.mean_count, out.jacobian.std_count,
           out.jacobian.percent});

  CsvWriter summary(outdir + "/summary.csv");
  summary.header({"pearson_udul", "mean_dice", "identity_dice",
                  "dice_improvement", "samples"});
  summary.row({out.r_udul, out.mean_dice, out.identity_dice,
               out.mean_dice - out.identity_dice,
               static_cast<double>(velocity_samples.size())});

  write_field(outdir + "/uncertainty.mvf", out.uncertainty);
  return out;
}

}  // namespace svreg
