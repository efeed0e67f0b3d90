#include "svreg/sgld.hpp"

#include <cmath>
#include <stdexcept>

namespace svreg {

SgldResult run_sgld(EnergyModel& model, std::vector<double> init_w,
                    const SgldConfig& cfg,
                    const std::function<void(long, const SgldTraceRow&)>& on_trace) {
  cfg.validate();
  const std::size_t P = model.size();
  check(init_w.size() == P, "run_sgld: initial state size mismatch");
  check(cfg.precond.empty() || cfg.precond.size() == P,
        "run_sgld: preconditioner size mismatch");

  std::vector<double> w = std::move(init_w);
  std::vector<double> grad(P);
  std::vector<double> noise_scale(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double a = cfg.precond.empty() ? 1.0 : cfg.precond[p];
    noise_scale[p] = std::sqrt(2.0 * cfg.tau * a);
  }

  Rng rng(cfg.seed);
  SgldResult out;
  out.samples.reserve(static_cast<std::size_t>(cfg.retain));

  const long total = cfg.burn_in + cfg.retain * cfg.thin;
  for (long k = 0; k < total; ++k) {
    model.begin_iteration(static_cast<int>(k));
    model.eval(w, grad);
    model.filter_gradient(grad);

    for (std::size_t p = 0; p < P; ++p) {
      const double a = cfg.precond.empty() ? 1.0 : cfg.precond[p];
      double step = -cfg.tau * a * grad[p];  // grad log pi = -dE/dw
      if (cfg.noise) step += noise_scale[p] * rng.normal();
      w[p] += step;
      if (!std::isfinite(w[p]))
        throw std::runtime_error("run_sgld: non-finite state at step " +
                                 std::to_string(k));
    }

    model.saem_update(1.0 / (1.0 + cfg.saem_decay * k));

    if (cfg.trace_every > 0 && k % cfg.trace_every == 0) {
      SgldTraceRow row{k, model.last_data_energy(), model.last_reg_energy()};
      out.trace.push_back(row);
      if (on_trace) on_trace(k, row);
    }

    const long since_burn_in = k + 1 - cfg.burn_in;
    if (since_burn_in > 0 && since_burn_in % cfg.thin == 0 &&
        static_cast<long>(out.samples.size()) < cfg.retain)
      out.samples.push_back(w);
  }
  out.steps_run = total;
  return out;
}

}  // namespace svreg
