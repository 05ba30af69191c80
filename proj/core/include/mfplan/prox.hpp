#pragma once

#include "mfplan/model.hpp"

namespace mfplan {

struct ProxResult {
  double m = 0.0;
  Vec w{0.0, 0.0};
  int iterations = 0;
};

// argmin over m >= 0, w of
//   m L(x, w/m) + F(x,m) + (|m - m~|^2 + |w - w~|^2) / (2 tau).
ProxResult prox_action(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau);

// Same without the potential and coupling terms:
//   |w + z m|^2 / (2 g m) + (|m - m~|^2 + |w - w~|^2) / (2 tau).
ProxResult prox_kinetic(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau);

// argmin over m >= 0 of F(x,m) + V_H m + |m - m~|^2 / (2 tau).
double prox_coupling(const PointModel& c, double m_tilde, double tau);

// Gradient of the prox_action objective at (m, w) with m > 0, or the
// complementarity violation when m = 0. Zero at the minimiser.
double prox_action_residual(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau,
                            const ProxResult& r);

}  // namespace mfplan
