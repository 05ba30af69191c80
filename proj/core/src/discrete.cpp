#include "discrete.hpp"

#include <cmath>

namespace mfplan::detail {

double slice_weight(const GridSpec& g, int k) { return (k == 0 || k == g.nt) ? 0.5 : 1.0; }

FaceArrays face_density(const DensityField& m) {
  const GridSpec& g = m.grid();
  FaceArrays rho;
  for (int a = 0; a < g.d; ++a) {
    rho[a].assign(g.nt * g.faces(a), 0.0);
    const AxisLines lines(g, a);
    const std::size_t nf = g.faces(a);
    for (int k = 0; k < g.nt; ++k) {
      const auto lo = m.slice(k), hi = m.slice(k + 1);
      double* r = rho[a].data() + k * nf;
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        const std::size_t cs = lines.cell_stride(), fs = lines.face_stride();
        for (int j = 0; j < g.nx; ++j) {
          const double s = 0.25 * (lo[cb + j * cs] + hi[cb + j * cs]);
          r[fb + j * fs] += s;
          r[fb + (j + 1) * fs] += s;
        }
      }
    }
  }
  return rho;
}

void add_face_density_adjoint(const GridSpec& g, const FaceArrays& y, double scale,
                              DensityField& out) {
  for (int a = 0; a < g.d; ++a) {
    const AxisLines lines(g, a);
    const std::size_t nf = g.faces(a);
    for (int k = 0; k < g.nt; ++k) {
      auto lo = out.slice(k), hi = out.slice(k + 1);
      const double* yk = y[a].data() + k * nf;
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        const std::size_t cs = lines.cell_stride(), fs = lines.face_stride();
        for (int j = 0; j < g.nx; ++j) {
          const double s = 0.25 * scale * (yk[fb + j * fs] + yk[fb + (j + 1) * fs]);
          lo[cb + j * cs] += s;
          hi[cb + j * cs] += s;
        }
      }
    }
  }
}

FaceArrays face_momentum(const CellField& u) {
  const GridSpec& g = u.grid();
  const double inv_dx = 1.0 / g.dx();
  FaceArrays P;
  for (int a = 0; a < g.d; ++a) {
    P[a].assign(g.nt * g.faces(a), 0.0);
    const AxisLines lines(g, a);
    const std::size_t nf = g.faces(a);
    for (int k = 0; k < g.nt; ++k) {
      const auto uk = u.slice(k);
      double* pk = P[a].data() + k * nf;
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        const std::size_t cs = lines.cell_stride(), fs = lines.face_stride();
        for (int f = 1; f < g.nx; ++f) {
          pk[fb + f * fs] = (uk[cb + f * cs] - uk[cb + (f - 1) * cs]) * inv_dx;
        }
      }
    }
  }
  return P;
}

FaceArrays face_hamiltonian(const DiscreteModel& dm, const FaceArrays& P) {
  const GridSpec& g = dm.grid;
  FaceArrays h;
  for (int a = 0; a < g.d; ++a) {
    h[a].assign(g.nt * g.faces(a), 0.0);
    const AxisLines lines(g, a);
    const std::size_t nf = g.faces(a);
    const auto& faces = dm.faces[a];
    for (int k = 0; k < g.nt; ++k) {
      const double* pk = P[a].data() + k * nf;
      double* hk = h[a].data() + k * nf;
      for (std::size_t f = 0; f < nf; ++f) {
        const PointModel& c = faces[f];
        hk[f] = 0.5 * c.g * pk[f] * pk[f] + c.z[a] * pk[f];
      }
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t fb = lines.face_base(l), fs = lines.face_stride();
        for (const std::size_t f : {fb, fb + g.nx * fs}) {
          const PointModel& c = faces[f];
          hk[f] = -c.z[a] * c.z[a] / (2.0 * c.g);
        }
      }
    }
  }
  return h;
}

double kinetic_density(const PointModel& face, int axis, double rho, double w) {
  if (rho > 0.0) {
    const double s = w + face.z[axis] * rho;
    return s * s / (2.0 * face.g * rho);
  }
  if (rho == 0.0 && w == 0.0) return 0.0;
  return kInfinity;
}

double quarter_face_sum(const GridSpec& g, const FaceArrays& h, int k, std::size_t cell) {
  const auto idx = g.cell_index(cell);
  double s = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const AxisLines lines(g, a);
    const int j = idx[a];
    const std::size_t line = g.d == 1 ? 0 : (a == 0 ? static_cast<std::size_t>(idx[1])
                                                    : static_cast<std::size_t>(idx[0]));
    const std::size_t fb = lines.face_base(line), fs = lines.face_stride();
    const double* hk = h[a].data() + k * g.faces(a);
    s += 0.25 * (hk[fb + j * fs] + hk[fb + (j + 1) * fs]);
  }
  return s;
}

SliceField hj_expression(const DiscreteModel& dm, const CellField& u, const FaceArrays& h) {
  const GridSpec& g = dm.grid;
  SliceField out(g);
  const double inv_dt = 1.0 / g.dt();
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double H = quarter_face_sum(g, h, k - 1, c) + quarter_face_sum(g, h, k, c) -
                       dm.cells[c].V_H;
      out.at(k, c) = -(u.at(k, c) - u.at(k - 1, c)) * inv_dt + H;
    }
  }
  return out;
}

}  // namespace mfplan::detail
