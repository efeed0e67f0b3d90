#include "oracle/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "svreg/rng.hpp"

namespace svreg::oracle {

namespace {

Eigen::MatrixXd covariance_matrix(const LowRankGaussian& q) {
  const auto P = static_cast<Eigen::Index>(q.dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(P, P);
  for (Eigen::Index p = 0; p < P; ++p)
    cov(p, p) = q.sigma[p] * q.sigma[p];
  for (int r = 0; r < q.rank; ++r)
    for (Eigen::Index i = 0; i < P; ++i)
      for (Eigen::Index j = 0; j < P; ++j)
        cov(i, j) += q.factor[i * q.rank + r] * q.factor[j * q.rank + r];
  return cov;
}

}  // namespace

std::vector<double> dense_covariance(const LowRankGaussian& q) {
  const Eigen::MatrixXd cov = covariance_matrix(q);
  std::vector<double> out(q.dim * q.dim);
  for (std::size_t i = 0; i < q.dim; ++i)
    for (std::size_t j = 0; j < q.dim; ++j)
      out[i * q.dim + j] = cov(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(j));
  return out;
}

double dense_log_det(const LowRankGaussian& q) {
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_matrix(q));
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += 2.0 * std::log(l(i, i));
  return acc;
}

std::vector<double> dense_solve(const LowRankGaussian& q,
                                std::span<const double> v) {
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(q.dim));
  for (std::size_t i = 0; i < q.dim; ++i)
    rhs(static_cast<Eigen::Index>(i)) = v[i];
  const Eigen::VectorXd x = covariance_matrix(q).llt().solve(rhs);
  return {x.data(), x.data() + x.size()};
}

double dense_entropy(const LowRankGaussian& q) {
  return 0.5 * dense_log_det(q) +
         0.5 * static_cast<double>(q.dim) *
             (1.0 + std::log(2.0 * 3.14159265358979323846));
}

std::array<double, 9> matrix_exponential(const std::array<double, 9>& a, int d,
                                         int terms) {
  // entries at a[i * 3 + j] regardless of d
  std::array<double, 9> result{}, term{};
  for (int i = 0; i < d; ++i) {
    result[i * 3 + i] = 1.0;
    term[i * 3 + i] = 1.0;
  }
  for (int k = 1; k <= terms; ++k) {
    std::array<double, 9> next{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int m = 0; m < d; ++m) s += term[i * 3 + m] * a[m * 3 + j];
        next[i * 3 + j] = s / k;
      }
    term = next;
    for (int i = 0; i < 9; ++i) result[i] += term[i];
  }
  return result;
}

double central_difference(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> at, std::size_t i, double h) {
  const double orig = at[i];
  at[i] = orig + h;
  const double fp = f(at);
  at[i] = orig - h;
  const double fm = f(at);
  at[i] = orig;
  return (fp - fm) / (2.0 * h);
}

MonteCarloMean gamma_log_mean(double shape, double rate, std::size_t n,
                              std::uint64_t seed) {
  Rng rng(seed);
  // Marsaglia-Tsang; shapes < 1 via the boost X_a = X_{a+1} U^{1/a}
  auto draw = [&rng](double a) {
    double boost = 1.0;
    if (a < 1.0) {
      boost = std::pow(rng.uniform(), 1.0 / a);
      a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = rng.normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = rng.uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return boost * d * v;
    }
  };
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(draw(shape) / rate);
    sum += lx;
    sum2 += lx * lx;
  }
  MonteCarloMean out;
  const double dn = static_cast<double>(n);
  out.mean = sum / dn;
  const double var = (sum2 - dn * out.mean * out.mean) / (dn - 1.0);
  out.std_error = std::sqrt(var / dn);
  return out;
}

double brute_force_asd(const LabelField& a, const LabelField& b,
                       std::int32_t label) {
  const GridSpec& g = a.grid;
  auto strides = g.strides();
  auto boundary = [&](const LabelField& f) {
    std::vector<std::array<double, 3>> pts;
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      if (f.labels[idx] == label) {
        bool edge = false;
        for (int ax = 0; ax < g.ndim && !edge; ++ax) {
          if (x[ax] == 0 || f.labels[idx - strides[ax]] != label) edge = true;
          else if (x[ax] == g.dims[ax] - 1 ||
                   f.labels[idx + strides[ax]] != label)
            edge = true;
        }
        if (edge) {
          std::array<double, 3> p{0, 0, 0};
          for (int ax = 0; ax < g.ndim; ++ax) p[ax] = x[ax] * g.spacing[ax];
          pts.push_back(p);
        }
      }
      for (int ax = g.ndim - 1; ax >= 0; --ax) {
        if (++x[ax] < g.dims[ax]) break;
        x[ax] = 0;
      }
    }
    return pts;
  };
  const auto pa = boundary(a);
  const auto pb = boundary(b);
  check(!pa.empty() && !pb.empty(), "brute_force_asd: empty boundary");
  auto nearest = [&](const std::array<double, 3>& p,
                     const std::vector<std::array<double, 3>>& set) {
    double best = 1e300;
    for (const auto& s : set) {
      double d2 = 0.0;
      for (int ax = 0; ax < 3; ++ax) d2 += (p[ax] - s[ax]) * (p[ax] - s[ax]);
      best = std::min(best, d2);
    }
    return std::sqrt(best);
  };
  double acc = 0.0;
  for (const auto& p : pa) acc += nearest(p, pb);
  for (const auto& p : pb) acc += nearest(p, pa);
  return acc / static_cast<double>(pa.size() + pb.size());
}

bool moving_average_non_decreasing(std::span<const double> values, int window) {
  if (static_cast<int>(values.size()) < 2 * window) return true;
  std::vector<double> means;
  for (std::size_t k = 0; k + window <= values.size();
       k += static_cast<std::size_t>(window)) {
    double acc = 0.0;
    for (std::size_t i = k; i < k + window; ++i) acc += values[i];
    means.push_back(acc / window);
  }
  // noise level of window means from consecutive differences in the tail
  const std::size_t tail = means.size() - means.size() / 2;
  double var = 0.0;
  std::size_t n = 0;
  for (std::size_t i = tail; i + 1 < means.size(); ++i) {
    const double d = means[i + 1] - means[i];
    var += 0.5 * d * d;
    ++n;
  }
  const double noise = n ? std::sqrt(var / n) : 0.0;
  // the running max of ~N stationary window means sits ~2.3 noise-sigmas
  // above the level, so a drop below it only signals regression past ~6 sigma
  const double tol = std::max(6.0 * noise, 1e-9);
  double running_max = -1e300;
  for (double m : means) {
    if (m < running_max - tol) return false;
    running_max = std::max(running_max, m);
  }
  // overall trend: the last quarter must not sit below the first quarter
  const std::size_t quarter = std::max<std::size_t>(1, means.size() / 4);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) {
    first += means[i];
    last += means[means.size() - 1 - i];
  }
  return last >= first - quarter * noise;
}

double maximise_1d(const std::function<double(double)>& f, double lo, double hi,
                   double tol) {
  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace svreg::oracle
