#include "svreg/config.hpp"

#include <charconv>
#include <sstream>

#include "svreg/io.hpp"

namespace svreg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail("config: bad numeric value for '" + key + "': " + v);
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail("config: bad integer value for '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail("config: bad boolean value for '" + key + "': " + v);
}

// "64x64" or "32x32x24"
std::vector<int> parse_dims(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, 'x'))
    out.push_back(static_cast<int>(parse_long(key, trim(part))));
  check(out.size() == 2 || out.size() == 3, "config: dims must have 2 or 3 axes");
  return out;
}

std::vector<double> parse_spacing(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, 'x'))
    out.push_back(parse_double(key, trim(part)));
  check(out.size() >= 1 && out.size() <= 3, "config: bad spacing");
  return out;
}

std::string dims_to_string(const std::vector<int>& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(d[i]);
  }
  return s;
}

std::string spacing_to_string(const std::vector<double>& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += 'x';
    s += format_double(d[i]);
  }
  return s;
}

}  // namespace

void RunConfig::validate() const {
  check(dims.size() == 2 || dims.size() == 3, "config: dims must have 2 or 3 axes");
  for (int d : dims) check(d >= 4, "config: dims must be >= 4");
  check(spacing.size() == dims.size() || spacing.size() == 1,
        "config: spacing must match dims (or be a single value)");
  for (double s : spacing) check(s > 0, "config: spacing must be positive");
  check(svf_steps >= 0 && svf_steps <= 16, "config: svf_steps must be in [0,16]");
  check(parametrisation == "dense" || parametrisation == "bspline",
        "config: parametrisation must be dense or bspline");
  check(bspline_spacing >= 1, "config: bspline_spacing must be >= 1");
  check(window >= 1 && window % 2 == 1, "config: window must be odd");
  check(gmm_components >= 1, "config: gmm_components must be >= 1");
  check(kappa > 0, "config: kappa must be positive");
  check(sigma_beta > 0, "config: sigma_beta must be positive");
  check(reg_mode == "lognormal" || reg_mode == "fixed_l2" ||
            reg_mode == "gamma_prior",
        "config: reg_mode must be lognormal, fixed_l2 or gamma_prior");
  check(lambda_init > 0, "config: lambda_init must be positive");
  check(lambda_reg > 0, "config: lambda_reg must be positive");
  check(varsigma > 0, "config: varsigma must be positive");
  check(vi_iters > 0, "config: vi_iters must be positive");
  check(rank >= 0 && rank <= 8, "config: rank must be in [0,8]");
  check(lr_posterior > 0 && lr_gmm > 0 && lr_reg > 0,
        "config: step sizes must be positive");
  check(lr_decay >= 0, "config: lr_decay must be non-negative");
  check(sigma_init > 0, "config: sigma_init must be positive");
  check(u_init >= 0, "config: u_init must be non-negative");
  check(sobolev_width >= 3 && sobolev_width % 2 == 1,
        "config: sobolev_width must be odd, >= 3");
  check(sobolev_lambda > 0, "config: sobolev_lambda must be positive");
  check(tau > 0, "config: tau must be positive");
  check(burn_in >= 0, "config: burn_in must be non-negative");
  check(chains >= 1, "config: chains must be >= 1");
  check(samples >= chains, "config: samples must be >= chains");
  check(thin >= 1, "config: thin must be >= 1");
  check(trace_every >= 0, "config: trace_every must be non-negative");
  check(labels >= 1, "config: labels must be >= 1");
  check(noise >= 0, "config: noise must be non-negative");
  check(warp_amplitude > 0, "config: warp_amplitude must be positive");
}

Parametrisation RunConfig::parametrisation_enum() const {
  return parametrisation == "bspline" ? Parametrisation::Bspline
                                      : Parametrisation::Dense;
}

RegMode RunConfig::reg_mode_enum() const {
  if (reg_mode == "fixed_l2") return RegMode::FixedL2;
  if (reg_mode == "gamma_prior") return RegMode::GammaPrior;
  return RegMode::LognormalLearnable;
}

double RunConfig::resolved_tau() const {
  if (tau_explicit) return tau;
  return parametrisation == "bspline" ? 5e-2 : 4e-1;
}

void config_set(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "dims") c.dims = parse_dims(key, v);
  else if (key == "spacing") c.spacing = parse_spacing(key, v);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_long(key, v));
  else if (key == "svf_steps") c.svf_steps = static_cast<int>(parse_long(key, v));
  else if (key == "parametrisation") c.parametrisation = v;
  else if (key == "bspline_spacing") c.bspline_spacing = static_cast<int>(parse_long(key, v));
  else if (key == "window") c.window = static_cast<int>(parse_long(key, v));
  else if (key == "gmm_components") c.gmm_components = static_cast<int>(parse_long(key, v));
  else if (key == "kappa") c.kappa = parse_double(key, v);
  else if (key == "mu_beta") c.mu_beta = parse_double(key, v);
  else if (key == "sigma_beta") c.sigma_beta = parse_double(key, v);
  else if (key == "reg_mode") c.reg_mode = v;
  else if (key == "lambda_init") c.lambda_init = parse_double(key, v);
  else if (key == "lambda_reg") c.lambda_reg = parse_double(key, v);
  else if (key == "eta") c.eta = parse_double(key, v);
  else if (key == "varsigma") c.varsigma = parse_double(key, v);
  else if (key == "vi_iters") c.vi_iters = static_cast<int>(parse_long(key, v));
  else if (key == "rank") c.rank = static_cast<int>(parse_long(key, v));
  else if (key == "lr_posterior") c.lr_posterior = parse_double(key, v);
  else if (key == "lr_gmm") c.lr_gmm = parse_double(key, v);
  else if (key == "lr_reg") c.lr_reg = parse_double(key, v);
  else if (key == "lr_decay") c.lr_decay = parse_double(key, v);
  else if (key == "sigma_init") c.sigma_init = parse_double(key, v);
  else if (key == "u_init") c.u_init = parse_double(key, v);
  else if (key == "sobolev_width") c.sobolev_width = static_cast<int>(parse_long(key, v));
  else if (key == "sobolev_lambda") c.sobolev_lambda = parse_double(key, v);
  else if (key == "smooth_samples") c.smooth_samples = parse_bool(key, v);
  else if (key == "smooth_gradients") c.smooth_gradients = parse_bool(key, v);
  else if (key == "tau") {
    c.tau = parse_double(key, v);
    c.tau_explicit = true;
    c.tau_calibrate = false;
  } else if (key == "tau_calibrate") c.tau_calibrate = parse_bool(key, v);
  else if (key == "burn_in") c.burn_in = parse_long(key, v);
  else if (key == "chains") c.chains = static_cast<int>(parse_long(key, v));
  else if (key == "samples") c.samples = static_cast<int>(parse_long(key, v));
  else if (key == "thin") c.thin = parse_long(key, v);
  else if (key == "sgld_noise") c.sgld_noise = parse_bool(key, v);
  else if (key == "trace_every") c.trace_every = parse_long(key, v);
  else if (key == "labels") c.labels = static_cast<int>(parse_long(key, v));
  else if (key == "noise") c.noise = parse_double(key, v);
  else if (key == "warp_amplitude") c.warp_amplitude = parse_double(key, v);
  else fail("config: unknown key '" + key + "'");
}

RunConfig config_parse(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    config_set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

std::string config_echo(const RunConfig& c) {
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) {
    s += k + " = " + v + "\n";
  };
  kv("dims", dims_to_string(c.dims));
  kv("spacing", spacing_to_string(c.spacing));
  kv("seed", std::to_string(c.seed));
  kv("svf_steps", std::to_string(c.svf_steps));
  kv("parametrisation", c.parametrisation);
  kv("bspline_spacing", std::to_string(c.bspline_spacing));
  kv("window", std::to_string(c.window));
  kv("gmm_components", std::to_string(c.gmm_components));
  kv("kappa", format_double(c.kappa));
  kv("mu_beta", format_double(c.mu_beta));
  kv("sigma_beta", format_double(c.sigma_beta));
  kv("reg_mode", c.reg_mode);
  kv("lambda_init", format_double(c.lambda_init));
  kv("lambda_reg", format_double(c.lambda_reg));
  kv("eta", format_double(c.eta));
  kv("varsigma", format_double(c.varsigma));
  kv("vi_iters", std::to_string(c.vi_iters));
  kv("rank", std::to_string(c.rank));
  kv("lr_posterior", format_double(c.lr_posterior));
  kv("lr_gmm", format_double(c.lr_gmm));
  kv("lr_reg", format_double(c.lr_reg));
  kv("lr_decay", format_double(c.lr_decay));
  kv("sigma_init", format_double(c.sigma_init));
  kv("u_init", format_double(c.u_init));
  kv("sobolev_width", std::to_string(c.sobolev_width));
  kv("sobolev_lambda", format_double(c.sobolev_lambda));
  kv("smooth_samples", c.smooth_samples ? "true" : "false");
  kv("smooth_gradients", c.smooth_gradients ? "true" : "false");
  kv("tau", format_double(c.resolved_tau()));
  kv("tau_calibrate", c.tau_calibrate ? "true" : "false");
  kv("burn_in", std::to_string(c.burn_in));
  kv("chains", std::to_string(c.chains));
  kv("samples", std::to_string(c.samples));
  kv("thin", std::to_string(c.thin));
  kv("sgld_noise", c.sgld_noise ? "true" : "false");
  kv("trace_every", std::to_string(c.trace_every));
  kv("labels", std::to_string(c.labels));
  kv("noise", format_double(c.noise));
  kv("warp_amplitude", format_double(c.warp_amplitude));
  return s;
}

}  // namespace svreg
