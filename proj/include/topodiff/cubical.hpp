#pragma once

#include <array>
#include <vector>

#include "topodiff/common.hpp"

namespace topodiff {

// Sublevel-set cubical persistence of a 2-D scalar field, V-construction:
// pixels are vertices, edges join 4-neighbors, unit squares span 2x2 blocks,
// and a cell's value is the max over its vertices. Ties are broken in
// row-major pixel order everywhere (elder rule and witness selection).
//
// Essential classes get death = cap and no death witness. Pairs with
// birth == death are dropped; essential points are always kept.

struct PersistencePoint {
  int dim = 0;
  double birth = 0.0;
  double death = 0.0;
  Pixel birth_pixel;
  Pixel death_pixel;  // invalid for essential classes
  bool essential = false;
};

struct PersistenceDiagram {
  std::vector<PersistencePoint> points;
  double cap = 0.0;

  std::vector<PersistencePoint> dim_points(int d) const {
    std::vector<PersistencePoint> out;
    for (const auto& p : points)
      if (p.dim == d) out.push_back(p);
    return out;
  }
  // sorted (dim, birth, death) triples for multiset comparison
  std::vector<std::array<double, 3>> canonical() const;
};

// Fast path: union-find for dim 0, boundary-matrix reduction over Z2 for
// dim 1. Requires cap >= max(f); rejects non-finite values.
PersistenceDiagram sublevel_pd(const ScalarField& f, double cap);

// Definitionally-correct oracle: enumerates all distinct thresholds and
// derives the diagram from ranks of the inclusion-induced maps between
// sublevel complexes. No witnesses. Guarded to H*W <= 49.
PersistenceDiagram brute_force_pd(const ScalarField& f, double cap);

// Number of dim-d classes alive at the threshold: birth <= t < death.
int betti_at(const ScalarField& f, double threshold, int dim);

}  // namespace topodiff
