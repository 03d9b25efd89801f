#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tubeflow/heatkernel.hpp"
#include "tubeflow/rng.hpp"

namespace tubeflow {

// Chart of the stored states: ambient plane points, Fermi (s, v) pairs on the
// unit tube, or bare base coordinates s.
enum class Chart { Ambient, Fermi, Base };

// One sampled path, stored on the uniform grid t0 + k*dt (dt may be a
// multiple of the simulation step when thinning is on).
struct PathSample {
  std::uint32_t stream_id = 0;
  double t0 = 0.0;
  double dt = 0.0;
  Chart chart = Chart::Base;
  std::vector<double> c1;  // x or s
  std::vector<double> c2;  // y, v, or unused (Base)
  double log_weight = 0.0;
  bool alive = true;

  int steps() const { return static_cast<int>(c1.size()) - 1; }
};

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double ess = 0.0;  // effective sample size (== n for unweighted)
  int n = 0;
};

// Ambient Brownian motion with per-step increments Normal(0, h) per
// coordinate (generator Delta/2 convention).  wrap_length > 0 wraps the first
// coordinate modulo that period (cylinder chart).
PathSample simulate_bm(double x0, double y0, double T, double h,
                       RngStream& rng, double wrap_length = 0.0,
                       int store_every = 1);

struct RejectionResult {
  std::vector<PathSample> paths;
  std::uint64_t attempts = 0;
  double acceptance_rate = 0.0;
  bool floor_hit = false;  // acceptance fell below the 1e-5 floor
};

// Ambient BM started on the curve (n = 0 at s = 0), kept only if it stays in
// the tube |n| < eps at every step; with bridge_correction each step is also
// killed with the Brownian-bridge crossing probability exp(-2 d1 d2 / h)
// against the nearest fiber boundary.  Aborts with floor_hit when the
// acceptance rate is provably below 1e-5.
RejectionResult condition_rejection(const CurveGeometry& curve, double eps,
                                    double T, double h, int n_target,
                                    std::uint64_t seed,
                                    bool bridge_correction = true,
                                    int store_every = 1);

enum class HTransformMode { Plain, Nu };

// Rejection-free sampler: exact Markov chain on the nodes of a physical-tube
// discretization, with transition mass P_h(x, y) * survival(T - t - h, y).
// Plain mode drives the absorbed-Brownian-motion kernel; Nu mode includes the
// curvature potential (Feynman-Kac weighted process).  States in Fermi chart.
// The one-step transition matrix is the exact matrix exponential of the
// discrete generator (dense spectral decomposition of the sampler grid), so
// the chain law carries no time-stepping bias, only the spatial
// discretization of the Ns x Nv sampler grid.
std::vector<PathSample> condition_htransform(const CurveGeometry& curve,
                                             double eps, double T, int Ns,
                                             int Nv, double h, int n,
                                             std::uint64_t seed,
                                             HTransformMode mode =
                                                 HTransformMode::Plain,
                                             int store_every = 1);

// Weighted 1-D BM on the closed base curve: the weak limit of the conditioned
// tube process.  log_weight accumulates (h/8) * sum kappa^2 along the path
// (the surviving curvature density after the fiber-mode renormalization).
std::vector<PathSample> limit_sampler(const CurveGeometry& curve, double T,
                                      double h, int n, std::uint64_t seed,
                                      int store_every = 1);

// Self-normalized (weighted) estimate of E[f(pi(state_t))]; ambient states
// are projected through the curve's closest-point projection.  Throws if the
// effective sample size is below 30.
MCEstimate marginal_stat(const std::vector<PathSample>& paths,
                         const CurveGeometry& curve,
                         const std::function<double(double)>& f, double t);

// Weighted estimate of E[d_L(pi Y_s, pi Y_t)^{2M}].
MCEstimate kolmogorov_modulus(const std::vector<PathSample>& paths,
                              const CurveGeometry& curve, double s, double t,
                              int M);

// Flat binary path records: for each stored step of each path,
// (stream_id: u32, step: u32, s: f64, v_or_n: f64, log_w: f64),
// little-endian, in path-then-step order.
void write_paths(const std::vector<PathSample>& paths,
                 const std::string& file);

}  // namespace tubeflow
