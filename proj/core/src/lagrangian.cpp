#include "mfplan/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mfplan/error.hpp"
#include "mfplan/metrics.hpp"
#include "mfplan/parallel.hpp"

namespace mfplan {
namespace {

struct Lerp {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

Lerp lerp_index(double pos, std::size_t n) {
  if (n <= 1) return {0, 0, 0.0};
  pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), n - 2);
  return {lo, lo + 1, pos - static_cast<double>(lo)};
}

Vec clamp_box(const GridSpec& g, Vec x, bool& clamped) {
  for (int a = 0; a < g.d; ++a) {
    const double c = std::clamp(x[a], -g.R, g.R);
    if (c != x[a]) clamped = true;
    x[a] = c;
  }
  if (g.d == 1) x[1] = 0.0;
  return x;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

FlowInterpolator::FlowInterpolator(const ModelSpec& model, const Solution& s)
    : grid_(s.grid), model_(model), v_(s.v.v), mask_(s.v.mask), u_(s.u.values()),
      alpha_(s.alpha.values()) {
  require(mask_.size() == grid_.nt * grid_.cells(), ErrorCode::kShapeMismatch,
          "FlowInterpolator: velocity field missing");
  for (int a = grid_.d; a < 2; ++a) v_[a].assign(mask_.size(), 0.0);
}

FlowInterpolator::Stencil FlowInterpolator::stencil(const Vec& x) const {
  const GridSpec& g = grid_;
  Lerp l[2];
  for (int a = 0; a < 2; ++a) {
    l[a] = a < g.d ? lerp_index((x[a] + g.R) / g.dx() - 0.5, g.nx) : Lerp{0, 0, 0.0};
  }
  Stencil st{};
  st.count = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < (g.d == 2 ? 2 : 1); ++j) {
      const std::size_t ix = i ? l[0].hi : l[0].lo;
      const double wx = i ? l[0].frac : 1.0 - l[0].frac;
      std::size_t flat = ix;
      double w = wx;
      if (g.d == 2) {
        const std::size_t iy = j ? l[1].hi : l[1].lo;
        w *= j ? l[1].frac : 1.0 - l[1].frac;
        flat = g.flat_cell({static_cast<int>(ix), static_cast<int>(iy)});
      }
      st.cell[st.count] = flat;
      st.weight[st.count] = w;
      ++st.count;
    }
  }
  return st;
}

double FlowInterpolator::sample_cells(const std::vector<double>& data, std::size_t slice,
                                      const Vec& x) const {
  const Stencil st = stencil(x);
  const std::size_t base = slice * grid_.cells();
  double acc = 0.0;
  for (int i = 0; i < st.count; ++i) acc += st.weight[i] * data[base + st.cell[i]];
  return acc;
}

double FlowInterpolator::along_time(const std::vector<double>& data, std::size_t slices,
                                    double pos, const Vec& x) const {
  const Lerp l = lerp_index(pos, slices);
  const double a = sample_cells(data, l.lo, x);
  if (l.frac == 0.0) return a;
  return (1.0 - l.frac) * a + l.frac * sample_cells(data, l.hi, x);
}

Vec FlowInterpolator::velocity(double t, const Vec& x, bool* masked) const {
  const GridSpec& g = grid_;
  const Lerp lt = lerp_index(t / g.dt() - 0.5, g.nt);
  const Stencil st = stencil(x);
  Vec out{0.0, 0.0};
  double wsum = 0.0;
  for (int s = 0; s < 2; ++s) {
    const std::size_t k = s ? lt.hi : lt.lo;
    const double wt = s ? lt.frac : 1.0 - lt.frac;
    if (wt == 0.0) continue;
    for (int i = 0; i < st.count; ++i) {
      const std::size_t idx = k * g.cells() + st.cell[i];
      const double w = wt * st.weight[i];
      if (!mask_[idx] || w == 0.0) continue;
      wsum += w;
      for (int a = 0; a < g.d; ++a) out[a] += w * v_[a][idx];
    }
  }
  if (masked) *masked = wsum < 0.5;
  if (wsum <= 0.0) return {0.0, 0.0};
  for (int a = 0; a < g.d; ++a) out[a] /= wsum;
  return out;
}

double FlowInterpolator::alpha(double t, const Vec& x) const {
  return along_time(alpha_, grid_.nt + 1, t / grid_.dt(), x);
}

double FlowInterpolator::u(double t, const Vec& x) const {
  return along_time(u_, grid_.nt, t / grid_.dt() - 0.5, x);
}

// Traces at t = 0 and t = 1: linear extrapolation from the two nearest time cells.
double FlowInterpolator::u_initial(const Vec& x) const {
  if (grid_.nt < 2) return sample_cells(u_, 0, x);
  return 1.5 * sample_cells(u_, 0, x) - 0.5 * sample_cells(u_, 1, x);
}
double FlowInterpolator::u_final(const Vec& x) const {
  const std::size_t last = grid_.nt - 1;
  if (grid_.nt < 2) return sample_cells(u_, last, x);
  return 1.5 * sample_cells(u_, last, x) - 0.5 * sample_cells(u_, last - 1, x);
}

double FlowInterpolator::running_cost(double t, const Vec& x, const Vec& v) const {
  return lagrangian(model_, x, v) + alpha(t, x);
}

Vec Trajectory::position_at(double t) const {
  require(!times.empty(), ErrorCode::kInvalidArgument, "empty trajectory");
  if (t <= times.front()) return positions.front();
  if (t >= times.back()) return positions.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin()), lo = hi - 1;
  const double f = (t - times[lo]) / (times[hi] - times[lo]);
  return {positions[lo][0] + f * (positions[hi][0] - positions[lo][0]),
          positions[lo][1] + f * (positions[hi][1] - positions[lo][1])};
}

std::vector<Vec> sample_particles(const Density& m0, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::kInvalidArgument, "sample_particles: n must be >= 1");
  const GridSpec& g = m0.grid;
  require(m0.values.size() == g.cells(), ErrorCode::kShapeMismatch, "sample_particles: size");
  std::vector<double> cdf(g.cells());
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    require(m0.values[c] >= 0.0, ErrorCode::kDomain, "sample_particles: negative density");
    acc += m0.values[c];
    cdf[c] = acc;
  }
  require(acc > 0.0, ErrorCode::kDomain, "sample_particles: zero-mass density");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out(n);
  const double dx = g.dx();
  for (std::size_t i = 0; i < n; ++i) {
    const double level = unit(rng) * acc;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), level) -
                                             cdf.begin());
    c = std::min(c, g.cells() - 1);
    while (m0.values[c] == 0.0 && c > 0) --c;  // level hit a flat stretch at the top
    const auto idx = g.cell_index(c);
    Vec x{0.0, 0.0};
    if (g.d == 1) {
      // Inverse CDF inside the cell is linear.
      const double below = c > 0 ? cdf[c - 1] : 0.0;
      const double frac = std::clamp((level - below) / m0.values[c], 0.0, 1.0);
      x[0] = g.face_coord(idx[0]) + frac * dx;
    } else {
      for (int a = 0; a < 2; ++a) x[a] = g.face_coord(idx[a]) + unit(rng) * dx;
    }
    out[i] = x;
  }
  return out;
}

Trajectory trace_characteristic(const FlowInterpolator& flow, const Vec& x0, int steps,
                                int record_every) {
  require(steps >= 1 && record_every >= 1, ErrorCode::kInvalidArgument,
          "trace_characteristic: steps and record_every must be >= 1");
  const GridSpec& g = flow.grid();
  for (int a = 0; a < g.d; ++a) {
    require(std::abs(x0[a]) <= g.R, ErrorCode::kDomain, "trace_characteristic: start outside box");
  }
  Trajectory tr;
  const double h = 1.0 / steps;
  Vec x = x0;
  if (g.d == 1) x[1] = 0.0;
  int masked_steps = 0;
  bool masked = false;
  Vec v = flow.velocity(0.0, x, &masked);
  double c_prev = flow.running_cost(0.0, x, v);
  double e_prev = v[0] * v[0] + v[1] * v[1];
  double cost = 0.0, energy = 0.0;
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.positions.push_back(x);
    tr.cost_so_far.push_back(cost);
  };
  record(0.0);
  auto add = [](const Vec& a, const Vec& b, double s) { return Vec{a[0] + s * b[0], a[1] + s * b[1]}; };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const Vec k1 = v;
    const Vec k2 = flow.velocity(t + 0.5 * h, add(x, k1, 0.5 * h));
    const Vec k3 = flow.velocity(t + 0.5 * h, add(x, k2, 0.5 * h));
    const Vec k4 = flow.velocity(t + h, add(x, k3, h));
    for (int a = 0; a < 2; ++a) x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    x = clamp_box(g, x, tr.clamped);
    const double tn = (i + 1) * h;
    v = flow.velocity(tn, x, &masked);
    if (masked) ++masked_steps;
    const double c = flow.running_cost(tn, x, v);
    const double e = v[0] * v[0] + v[1] * v[1];
    cost += 0.5 * h * (c_prev + c);
    energy += 0.5 * h * (e_prev + e);
    c_prev = c;
    e_prev = e;
    if ((i + 1) % record_every == 0 || i + 1 == steps) record(tn);
  }
  tr.path_cost = cost;
  tr.energy = energy;
  tr.masked_fraction = static_cast<double>(masked_steps) / steps;
  tr.low_confidence = tr.masked_fraction > 0.1;
  return tr;
}

std::vector<Trajectory> trace_ensemble(const FlowInterpolator& flow, const std::vector<Vec>& starts,
                                       int steps, int record_every) {
  std::vector<Trajectory> out(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    out[i] = trace_characteristic(flow, starts[i], steps, record_every);
  });
  return out;
}

bool positivity_convention(const ModelSpec& model) {
  return model.V_H.min() >= 0.0 && model.V_f.min() >= 0.0;
}

SuperpositionReport verify_superposition(const FlowInterpolator& flow, const Solution& s,
                                         const std::vector<Trajectory>& paths) {
  const GridSpec& g = s.grid;
  require(!paths.empty(), ErrorCode::kInvalidArgument, "verify_superposition: no paths");
  SuperpositionReport rep;
  rep.particles = paths.size();
  const double n = static_cast<double>(paths.size());
  rep.baseline = 2.0 * g.R * std::sqrt(static_cast<double>(g.d)) / std::sqrt(n);
  rep.tolerance = 3.0 * (g.dx() + rep.baseline);
  for (const Trajectory& p : paths) {
    rep.mean_energy += p.energy / n;
    if (p.low_confidence) ++rep.low_confidence;
    if (p.clamped) ++rep.clamped;
  }
  for (std::size_t i = 0; i < s.v.density.size(); ++i) {
    double v2 = 0.0;
    for (int a = 0; a < g.d; ++a) v2 += s.v.v[a][i] * s.v.v[a][i];
    rep.field_kinetic += v2 * s.v.density[i];
  }
  rep.field_kinetic *= g.spacetime_volume();

  for (const double t : {0.25, 0.5, 0.75, 1.0}) {
    const Lerp l = lerp_index(t * g.nt, g.nt + 1);
    Density mt{g, std::vector<double>(g.cells())};
    for (std::size_t c = 0; c < g.cells(); ++c) {
      mt.values[c] = (1.0 - l.frac) * s.m.at(l.lo, c) + l.frac * s.m.at(l.hi, c);
      mt.values[c] = std::max(mt.values[c], 0.0);
    }
    double disc = 0.0;
    if (g.d == 1) {
      std::vector<double> xs(paths.size());
      for (std::size_t i = 0; i < paths.size(); ++i) xs[i] = paths[i].position_at(t)[0];
      disc = w1_1d_samples(xs, mt);
    } else {
      std::vector<double> hist(g.cells(), 0.0);
      for (const Trajectory& p : paths) {
        const Vec x = p.position_at(t);
        std::array<int, 2> idx{};
        for (int a = 0; a < 2; ++a) {
          idx[a] = std::clamp(static_cast<int>(std::floor((x[a] + g.R) / g.dx())), 0, g.nx - 1);
        }
        hist[g.flat_cell(idx)] += 1.0 / n;
      }
      const double mass = mt.mass();
      for (std::size_t c = 0; c < g.cells(); ++c) {
        disc += std::abs(hist[c] - mt.values[c] * g.cell_volume() / mass);
      }
    }
    rep.times.push_back(t);
    rep.discrepancy.push_back(disc);
  }
  rep.ok = rep.discrepancy.back() <= rep.tolerance;
  (void)flow;
  return rep;
}

SuperpositionReport verify_superposition(const ModelSpec& model, const Solution& s, std::size_t n,
                                         std::uint64_t seed, int steps) {
  const FlowInterpolator flow(model, s);
  if (steps <= 0) steps = 4 * s.grid.nt;
  const auto starts = sample_particles(Density{s.grid, s.m0}, n, seed);
  return verify_superposition(flow, s, trace_ensemble(flow, starts, steps, 1));
}

OptimalityReport path_optimality_check(const FlowInterpolator& flow, const Solution& s,
                                       const std::vector<Trajectory>& paths, int bumps,
                                       std::uint64_t seed, double tolerance) {
  const GridSpec& g = s.grid;
  OptimalityReport rep;
  rep.win_tolerance = tolerance;
  rep.nonnegative_model = positivity_convention(flow.model());
  rep.residual.assign(paths.size(), std::numeric_limits<double>::quiet_NaN());

  double pd = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Vec x = g.cell_center(c);
    pd += flow.u_initial(x) * s.m0[c] - flow.u_final(x) * s.m1[c];
  }
  const double mass0 = Density{g, s.m0}.mass();
  rep.potential_difference = pd * g.cell_volume() / (mass0 > 0.0 ? mass0 : 1.0);

  std::vector<std::size_t> wins(paths.size(), 0), tried(paths.size(), 0);
  std::vector<double> improve(paths.size(), 0.0);
  parallel_for(paths.size(), [&](std::size_t i) {
    const Trajectory& p = paths[i];
    if (p.low_confidence || p.times.size() < 2) return;
    rep.residual[i] = p.path_cost - (flow.u_initial(p.positions.front()) -
                                     flow.u_final(p.positions.back()));
    const std::size_t nodes = p.times.size();
    auto cost_of = [&](int k, double amp, const Vec& dir) {
      double acc = 0.0, prev = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) {
        const double t = p.times[j];
        const Vec base = p.positions[j];
        const double b = amp * std::sin(k * std::numbers::pi * t);
        const double db = amp * k * std::numbers::pi * std::cos(k * std::numbers::pi * t);
        Vec v = flow.velocity(t, base);
        bool dummy = false;
        const Vec x = clamp_box(g, {base[0] + b * dir[0], base[1] + b * dir[1]}, dummy);
        v[0] += db * dir[0];
        v[1] += db * dir[1];
        const double c = flow.running_cost(t, x, v);
        if (j > 0) acc += 0.5 * (p.times[j] - p.times[j - 1]) * (prev + c);
        prev = c;
      }
      return acc;
    };
    const Vec none{0.0, 0.0};
    const double ref = cost_of(1, 0.0, none);
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    std::uniform_int_distribution<int> mode(1, 3);
    std::uniform_real_distribution<double> amp(0.02 * g.R, 0.1 * g.R);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int b = 0; b < bumps; ++b) {
      const int k = mode(rng);
      const double a = amp(rng) * (rng() & 1 ? 1.0 : -1.0);
      const double th = angle(rng);
      const Vec dir = g.d == 1 ? Vec{1.0, 0.0} : Vec{std::cos(th), std::sin(th)};
      const double c = cost_of(k, a, dir);
      ++tried[i];
      if (c < ref - tolerance) ++wins[i];
      improve[i] = std::max(improve[i], ref - c);
    }
  });

  std::vector<double> abs_r, costs;
  double mean_cost = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    rep.perturbations += tried[i];
    rep.perturbation_wins += wins[i];
    rep.worst_improvement = std::max(rep.worst_improvement, improve[i]);
    if (std::isnan(rep.residual[i])) {
      ++rep.excluded;
      continue;
    }
    abs_r.push_back(std::abs(rep.residual[i]));
    costs.push_back(paths[i].path_cost);
    mean_cost += paths[i].path_cost;
    if (paths[i].path_cost < 0.0) rep.negative_cost_seen = true;
  }
  if (!costs.empty()) mean_cost /= static_cast<double>(costs.size());
  rep.mean_path_cost = mean_cost;
  rep.median_abs_residual = percentile(abs_r, 0.5);
  rep.p95_abs_residual = percentile(abs_r, 0.95);
  rep.median_path_cost = percentile(costs, 0.5);
  rep.residual_ok = !costs.empty() && rep.median_abs_residual <= 0.05 * std::abs(rep.median_path_cost);
  rep.minimality_ok = rep.perturbations > 0 &&
                      rep.perturbation_wins <= static_cast<std::size_t>(0.05 * rep.perturbations);
  rep.bridge_ok = !costs.empty() &&
                  std::abs(mean_cost - rep.potential_difference) <=
                      0.05 * std::abs(rep.potential_difference);
  return rep;
}

TransportPlanSummary transport_plan_summary(const GridSpec& g, const std::vector<Trajectory>& paths,
                                            int bins) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "transport_plan_summary: bins >= 1");
  TransportPlanSummary out;
  out.bins = bins;
  out.side = g.d == 2 ? static_cast<std::size_t>(bins) * bins : static_cast<std::size_t>(bins);
  out.joint.assign(out.side * out.side, 0.0);
  out.marginal0.assign(out.side, 0.0);
  out.marginal1.assign(out.side, 0.0);
  if (paths.empty()) return out;
  auto bin_of = [&](const Vec& x) {
    std::size_t flat = 0;
    for (int a = 0; a < g.d; ++a) {
      const int b = std::clamp(static_cast<int>(std::floor((x[a] + g.R) / (2.0 * g.R) * bins)), 0,
                               bins - 1);
      flat = flat * bins + b;
    }
    return flat;
  };
  const double w = 1.0 / static_cast<double>(paths.size());
  std::vector<Vec> disp;
  for (const Trajectory& p : paths) {
    const Vec x0 = p.positions.front(), x1 = p.positions.back();
    const std::size_t b0 = bin_of(x0), b1 = bin_of(x1);
    out.joint[b0 * out.side + b1] += w;
    out.marginal0[b0] += w;
    out.marginal1[b1] += w;
    const Vec d{x1[0] - x0[0], x1[1] - x0[1]};
    disp.push_back(d);
    out.mean_displacement[0] += w * d[0];
    out.mean_displacement[1] += w * d[1];
  }
  double spread = 0.0;
  for (const Vec& d : disp) {
    const double a = d[0] - out.mean_displacement[0], b = d[1] - out.mean_displacement[1];
    spread += w * (a * a + b * b);
  }
  out.diagonal_spread = std::sqrt(spread);
  return out;
}

}  // namespace mfplan
