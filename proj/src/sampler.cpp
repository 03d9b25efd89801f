#include "tubeflow/sampler.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace tubeflow {

namespace {

void maybe_store(PathSample& path, int k, int store_every, double a, double b) {
  if (k % store_every != 0) return;
  path.c1.push_back(a);
  path.c2.push_back(b);
}

double weighted_reduce(const std::vector<double>& vals,
                       const std::vector<double>& logw, MCEstimate& est) {
  const int n = static_cast<int>(vals.size());
  double lmax = -1e300;
  for (double lw : logw) lmax = std::max(lmax, lw);
  double sw = 0.0, sw2 = 0.0, swv = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(logw[i] - lmax);
    sw += w;
    sw2 += w * w;
    swv += w * vals[i];
  }
  est.n = n;
  est.ess = sw * sw / sw2;
  est.mean = swv / sw;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wn = std::exp(logw[i] - lmax) / sw;
    const double d = vals[i] - est.mean;
    var += wn * wn * d * d;
  }
  est.stderr_ = std::sqrt(var);
  return sw;
}

int state_count(double T, double h) {
  const int K = static_cast<int>(std::llround(T / h));
  if (K < 1 || std::abs(K * h - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("sampler: T must be a multiple of h");
  return K;
}

}  // namespace

PathSample simulate_bm(double x0, double y0, double T, double h,
                       RngStream& rng, double wrap_length, int store_every) {
  const int K = (T > 0.0) ? state_count(T, h) : 0;
  PathSample path;
  path.chart = Chart::Ambient;
  path.dt = h * store_every;
  const double sd = std::sqrt(h);
  double x = x0, y = y0;
  maybe_store(path, 0, store_every, x, y);
  for (int k = 1; k <= K; ++k) {
    x += sd * rng.normal();
    y += sd * rng.normal();
    if (wrap_length > 0.0) x = std::fmod(std::fmod(x, wrap_length) + wrap_length, wrap_length);
    maybe_store(path, k, store_every, x, y);
  }
  return path;
}

RejectionResult condition_rejection(const CurveGeometry& curve, double eps,
                                    double T, double h, int n_target,
                                    std::uint64_t seed, bool bridge_correction,
                                    int store_every) {
  if (!(eps > 0.0) || eps * curve.max_curvature() >= 1.0)
    throw std::invalid_argument("condition_rejection: invalid eps");
  const int K = state_count(T, h);
  const bool flat = curve.kind() == CurveKind::FlatCylinder;
  const double wrap = flat ? curve.total_length() : 0.0;
  const AmbientPoint start = curve.fermi_to_ambient(0.0, 0.0);
  RejectionResult res;
  const double sd = std::sqrt(h);
  while (static_cast<int>(res.paths.size()) < n_target) {
    const std::uint64_t attempt = res.attempts++;
    RngStream rng(seed, attempt);
    PathSample path;
    path.stream_id = static_cast<std::uint32_t>(attempt);
    path.chart = Chart::Ambient;
    path.dt = h * store_every;
    double x = start.x, y = start.y;
    double d_prev = eps;  // distance to the fiber boundary at the last step
    bool ok = true;
    maybe_store(path, 0, store_every, x, y);
    for (int k = 1; k <= K; ++k) {
      x += sd * rng.normal();
      y += sd * rng.normal();
      if (wrap > 0.0) x = std::fmod(std::fmod(x, wrap) + wrap, wrap);
      const double u_kill = rng.uniform();  // drawn unconditionally: keeps the
                                            // stream layout independent of the
                                            // correction flag
      double n_off;
      try {
        n_off = curve.closest_point_projection({x, y}).n;
      } catch (const std::runtime_error&) {
        ok = false;  // far outside the reach of the chart, certainly escaped
        break;
      }
      const double d_new = eps - std::abs(n_off);
      if (d_new <= 0.0) {
        ok = false;
        break;
      }
      if (bridge_correction &&
          u_kill < std::exp(-2.0 * d_prev * d_new / h)) {
        ok = false;  // the bridge between the endpoints crossed the boundary
        break;
      }
      d_prev = d_new;
      maybe_store(path, k, store_every, x, y);
    }
    if (ok) res.paths.push_back(std::move(path));
    // Acceptance floor: once enough attempts accumulate, a rate provably
    // below 1e-5 aborts the run rather than spinning forever.
    if (res.attempts >= 200000 &&
        static_cast<double>(res.paths.size() + 3) < 1e-5 * res.attempts) {
      res.floor_hit = true;
      break;
    }
  }
  res.acceptance_rate =
      res.attempts ? static_cast<double>(res.paths.size()) / res.attempts : 0.0;
  return res;
}

std::vector<PathSample> condition_htransform(const CurveGeometry& curve,
                                             double eps, double T, int Ns,
                                             int Nv, double h, int n,
                                             std::uint64_t seed,
                                             HTransformMode mode,
                                             int store_every) {
  const int K = state_count(T, h);
  const TubeGrid grid = build_grid(curve, Ns, Nv, eps);
  const FormOperator op =
      assemble_direct(curve, eps, Ns, Nv,
                      /*include_potential=*/mode == HTransformMode::Nu);
  const int N = op.size();
  // Exact one-step transition e^{-(h/2) M^{-1} A} via the dense spectral
  // decomposition of the mass-symmetrized generator.  Row x of the matrix is
  // the transition density from node x (exact in time; only the spatial grid
  // discretizes the dynamics).
  Eigen::MatrixXd Tm(N, N);
  {
    Vec dsqrt(N), dinv(N);
    for (int i = 0; i < N; ++i) {
      dsqrt[i] = std::sqrt(op.mass[i]);
      dinv[i] = 1.0 / dsqrt[i];
    }
    Eigen::MatrixXd S = Eigen::MatrixXd(op.stiffness);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) S(i, j) *= dinv[i] * dinv[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("condition_htransform: eigensolve failed");
    const Eigen::VectorXd decay =
        (-0.5 * h * eig.eigenvalues().array()).exp().matrix();
    const Eigen::MatrixXd VD = eig.eigenvectors() * decay.asDiagonal();
    Tm.noalias() = VD * eig.eigenvectors().transpose();
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) Tm(i, j) *= dinv[i] * dsqrt[j];
  }
  // Survival vectors pi_r = T^r 1 for r = 0..K.
  std::vector<Vec> surv(K + 1);
  surv[0] = Vec::Ones(N);
  for (int r = 1; r <= K; ++r) surv[r] = Tm * surv[r - 1];

  const int start_node = grid.idx(0, grid.Nv / 2 - 1);  // s = 0, v ~ 0
  std::vector<int> cur(n, start_node);
  std::vector<RngStream> rngs;
  rngs.reserve(n);
  for (int p = 0; p < n; ++p) rngs.emplace_back(seed, p);
  std::vector<PathSample> paths(n);
  for (int p = 0; p < n; ++p) {
    paths[p].stream_id = static_cast<std::uint32_t>(p);
    paths[p].chart = Chart::Fermi;
    paths[p].dt = h * store_every;
    const int j0 = start_node % (grid.Nv - 1);
    maybe_store(paths[p], 0, store_every, grid.s[start_node / (grid.Nv - 1)],
                grid.v[j0]);
  }
  // Synchronous march: one conditional-cdf cache per time step, keyed by the
  // currently occupied node.
  std::unordered_map<int, std::vector<double>> cache;
  for (int k = 0; k < K; ++k) {
    const Vec& pi = surv[K - k - 1];
    cache.clear();
    for (int p = 0; p < n; ++p) {
      auto it = cache.find(cur[p]);
      if (it == cache.end()) {
        std::vector<double> cdf(N);
        double acc = 0.0;
        for (int j = 0; j < N; ++j) {
          acc += std::max(0.0, Tm(cur[p], j)) * pi[j];
          cdf[j] = acc;
        }
        if (!(acc > 1e-300))
          throw std::runtime_error("condition_htransform: survival underflow");
        it = cache.emplace(cur[p], std::move(cdf)).first;
      }
      const std::vector<double>& cdf = it->second;
      const double u = rngs[p].uniform() * cdf.back();
      const int next = static_cast<int>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      cur[p] = std::min(next, N - 1);
      maybe_store(paths[p], k + 1, store_every,
                  grid.s[cur[p] / (grid.Nv - 1)], grid.v[cur[p] % (grid.Nv - 1)]);
    }
  }
  return paths;
}

std::vector<PathSample> limit_sampler(const CurveGeometry& curve, double T,
                                      double h, int n, std::uint64_t seed,
                                      int store_every) {
  const int K = state_count(T, h);
  const double L = curve.total_length();
  const double sd = std::sqrt(h);
  std::vector<PathSample> paths(n);
  for (int p = 0; p < n; ++p) {
    RngStream rng(seed, p);
    PathSample& path = paths[p];
    path.stream_id = static_cast<std::uint32_t>(p);
    path.chart = Chart::Base;
    path.dt = h * store_every;
    double s = 0.0;
    maybe_store(path, 0, store_every, s, 0.0);
    for (int k = 1; k <= K; ++k) {
      const double kap = curve.kappa(s);
      path.log_weight += (h / 8.0) * kap * kap;
      s = std::fmod(std::fmod(s + sd * rng.normal(), L) + L, L);
      maybe_store(path, k, store_every, s, 0.0);
    }
  }
  return paths;
}

MCEstimate marginal_stat(const std::vector<PathSample>& paths,
                         const CurveGeometry& curve,
                         const std::function<double(double)>& f, double t) {
  std::vector<double> vals, logw;
  for (const PathSample& p : paths) {
    if (!p.alive) continue;
    const int k = static_cast<int>(std::llround((t - p.t0) / p.dt));
    if (k < 0 || k > p.steps() ||
        std::abs(p.t0 + k * p.dt - t) > 1e-9 * std::max(1.0, t))
      throw std::invalid_argument("marginal_stat: t not on the stored grid");
    double s;
    if (p.chart == Chart::Ambient)
      s = curve.closest_point_projection({p.c1[k], p.c2[k]}).s;
    else
      s = p.c1[k];
    vals.push_back(f(s));
    logw.push_back(p.log_weight);
  }
  if (vals.empty()) throw std::runtime_error("marginal_stat: no alive paths");
  MCEstimate est;
  weighted_reduce(vals, logw, est);
  if (est.ess < 30.0)
    throw std::runtime_error("marginal_stat: effective sample size below 30");
  return est;
}

MCEstimate kolmogorov_modulus(const std::vector<PathSample>& paths,
                              const CurveGeometry& curve, double s, double t,
                              int M) {
  if (M < 1) throw std::invalid_argument("kolmogorov_modulus: M >= 1");
  std::vector<double> vals, logw;
  for (const PathSample& p : paths) {
    if (!p.alive) continue;
    const int ks = static_cast<int>(std::llround((s - p.t0) / p.dt));
    const int kt = static_cast<int>(std::llround((t - p.t0) / p.dt));
    if (ks < 0 || kt > p.steps() || ks > kt)
      throw std::invalid_argument("kolmogorov_modulus: times off the grid");
    auto base = [&](int k) {
      if (p.chart == Chart::Ambient)
        return curve.closest_point_projection({p.c1[k], p.c2[k]}).s;
      return p.c1[k];
    };
    const double d = curve.geodesic_distance(base(ks), base(kt));
    vals.push_back(std::pow(d, 2.0 * M));
    logw.push_back(p.log_weight);
  }
  if (vals.empty())
    throw std::runtime_error("kolmogorov_modulus: no alive paths");
  MCEstimate est;
  weighted_reduce(vals, logw, est);
  if (est.ess < 30.0)
    throw std::runtime_error("kolmogorov_modulus: effective sample size below 30");
  return est;
}

void write_paths(const std::vector<PathSample>& paths,
                 const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("write_paths: cannot open " + file);
  for (const PathSample& p : paths) {
    for (int k = 0; k <= p.steps(); ++k) {
      const std::uint32_t rec_id = p.stream_id;
      const std::uint32_t step = static_cast<std::uint32_t>(k);
      const double s = p.c1[k];
      const double von = p.c2[k];
      const double lw = p.log_weight;
      out.write(reinterpret_cast<const char*>(&rec_id), 4);
      out.write(reinterpret_cast<const char*>(&step), 4);
      out.write(reinterpret_cast<const char*>(&s), 8);
      out.write(reinterpret_cast<const char*>(&von), 8);
      out.write(reinterpret_cast<const char*>(&lw), 8);
    }
  }
}

}  // namespace tubeflow
