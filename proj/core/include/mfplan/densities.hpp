#pragma once

#include <cstdint>
#include <string>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"

namespace mfplan {

// Endpoint densities as exact cell averages, normalised to unit mass.
Density gaussian_density(const GridSpec& grid, const Vec& center, double sigma);
Density box_density(const GridSpec& grid, const Vec& lo, const Vec& hi);
Density bimodal_density(const GridSpec& grid, const Vec& c1, const Vec& c2, double sigma,
                        double weight1 = 0.5);
Density ring_density(const GridSpec& grid, double radius, double width);  // d = 2

// Mixture of 1-3 Gaussians with random centres/widths plus a small floor,
// fully determined by `seed`.
Density random_mixture(const GridSpec& grid, std::uint64_t seed, double floor = 0.0);

// Multiplies each cell by (1 + amplitude * U(-1,1)) and renormalises.
void jitter_density(Density& m, double amplitude, std::uint64_t seed);

// Rescales to the given mass.
void normalize_mass(Density& m, double mass = 1.0);

}  // namespace mfplan
