#include "topodiff/cubical.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace topodiff {

namespace {

// Grid cell bookkeeping. Edge ids: horizontal edges first (anchor (r,c),
// joining (r,c)-(r,c+1)), then vertical (anchor (r,c), joining (r,c)-(r+1,c)).
struct GridCells {
  int H, W;
  int n_vert, n_hedge, n_vedge, n_edge, n_square;

  explicit GridCells(const ScalarField& f)
      : H(f.rows),
        W(f.cols),
        n_vert(H * W),
        n_hedge(H * (W - 1)),
        n_vedge((H - 1) * W),
        n_edge(n_hedge + n_vedge),
        n_square((H - 1) * (W - 1)) {}

  std::pair<int, int> edge_vertices(int e) const {
    if (e < n_hedge) {
      const int r = e / (W - 1), c = e % (W - 1);
      return {r * W + c, r * W + c + 1};
    }
    const int ve = e - n_hedge;
    const int r = ve / W, c = ve % W;
    return {r * W + c, (r + 1) * W + c};
  }

  std::array<int, 4> square_vertices(int q) const {
    const int r = q / (W - 1), c = q % (W - 1);
    return {r * W + c, r * W + c + 1, (r + 1) * W + c, (r + 1) * W + c + 1};
  }

  std::array<int, 4> square_edges(int q) const {
    const int r = q / (W - 1), c = q % (W - 1);
    const int top = r * (W - 1) + c;
    const int bottom = (r + 1) * (W - 1) + c;
    const int left = n_hedge + r * W + c;
    const int right = n_hedge + r * W + c + 1;
    return {top, bottom, left, right};
  }
};

// value of a cell = max over its vertices; witness = earliest row-major
// vertex attaining the max
template <typename It>
std::pair<double, int> max_vertex(const ScalarField& f, It begin, It end) {
  double best = -std::numeric_limits<double>::infinity();
  int who = -1;
  for (It it = begin; it != end; ++it) {
    const double val = f.v[size_t(*it)];
    if (val > best || (val == best && *it < who)) {
      best = val;
      who = *it;
    }
  }
  return {best, who};
}

Pixel vertex_pixel(int v, int W) { return Pixel{v / W, v % W}; }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(size_t(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[size_t(x)] != x) {
      parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
      x = parent[size_t(x)];
    }
    return x;
  }
};

void check_field(const ScalarField& f, double cap) {
  if (f.rows < 1 || f.cols < 1) throw DataError("persistence: field must be at least 1x1");
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : f.v) {
    if (!std::isfinite(x)) throw DataError("persistence: non-finite filtration value");
    mx = std::max(mx, x);
  }
  if (cap < mx) throw DataError("persistence: cap must be >= max filtration value");
}

}  // namespace

std::vector<std::array<double, 3>> PersistenceDiagram::canonical() const {
  std::vector<std::array<double, 3>> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({double(p.dim), p.birth, p.death});
  std::sort(out.begin(), out.end());
  return out;
}

PersistenceDiagram sublevel_pd(const ScalarField& f, double cap) {
  check_field(f, cap);
  const GridCells g(f);
  PersistenceDiagram out;
  out.cap = cap;

  // ---- dim 0: union-find over vertices, elder rule ----
  // Edge order: (value, edge id). Vertex birth keys: (value, vertex id).
  std::vector<int> edges(size_t(g.n_edge));
  std::iota(edges.begin(), edges.end(), 0);
  std::vector<double> edge_val(size_t(g.n_edge));
  std::vector<int> edge_wit(size_t(g.n_edge));
  for (int e = 0; e < g.n_edge; ++e) {
    auto [u, v] = g.edge_vertices(e);
    const std::array<int, 2> vs{u, v};
    auto [val, wit] = max_vertex(f, vs.begin(), vs.end());
    edge_val[size_t(e)] = val;
    edge_wit[size_t(e)] = wit;
  }
  std::sort(edges.begin(), edges.end(), [&](int a, int b) {
    if (edge_val[size_t(a)] != edge_val[size_t(b)]) return edge_val[size_t(a)] < edge_val[size_t(b)];
    return a < b;
  });

  UnionFind uf(g.n_vert);
  std::vector<int> birth_vertex(size_t(g.n_vert));
  std::iota(birth_vertex.begin(), birth_vertex.end(), 0);

  auto older = [&](int bu, int bv) {
    // smaller (value, row-major id) wins
    const double fu = f.v[size_t(bu)], fv = f.v[size_t(bv)];
    if (fu != fv) return fu < fv ? bu : bv;
    return bu < bv ? bu : bv;
  };

  for (int e : edges) {
    auto [u, v] = g.edge_vertices(e);
    int ru = uf.find(u), rv = uf.find(v);
    if (ru == rv) continue;  // positive edge: creates a 1-cycle
    const int bu = birth_vertex[size_t(ru)], bv = birth_vertex[size_t(rv)];
    const int surv = older(bu, bv);
    const int dead = (surv == bu) ? bv : bu;
    const double birth = f.v[size_t(dead)];
    const double death = edge_val[size_t(e)];
    if (death > birth) {
      PersistencePoint p;
      p.dim = 0;
      p.birth = birth;
      p.death = death;
      p.birth_pixel = vertex_pixel(dead, g.W);
      p.death_pixel = vertex_pixel(edge_wit[size_t(e)], g.W);
      out.points.push_back(p);
    }
    uf.parent[size_t(ru)] = rv;
    birth_vertex[size_t(rv)] = surv;
  }
  // essential components (one per connected component of the full grid)
  for (int v = 0; v < g.n_vert; ++v) {
    if (uf.find(v) == v) {
      const int bv = birth_vertex[size_t(v)];
      PersistencePoint p;
      p.dim = 0;
      p.birth = f.v[size_t(bv)];
      p.death = cap;
      p.birth_pixel = vertex_pixel(bv, g.W);
      p.essential = true;
      out.points.push_back(p);
    }
  }

  // ---- dim 1: reduce the square->edge boundary matrix over Z2 ----
  if (g.n_square > 0) {
    // filtration position of each edge (rank in the sorted order above)
    std::vector<int> edge_pos(size_t(g.n_edge));
    for (int i = 0; i < g.n_edge; ++i) edge_pos[size_t(edges[size_t(i)])] = i;

    std::vector<int> squares(size_t(g.n_square));
    std::iota(squares.begin(), squares.end(), 0);
    std::vector<double> sq_val(size_t(g.n_square));
    std::vector<int> sq_wit(size_t(g.n_square));
    for (int q = 0; q < g.n_square; ++q) {
      auto vs = g.square_vertices(q);
      auto [val, wit] = max_vertex(f, vs.begin(), vs.end());
      sq_val[size_t(q)] = val;
      sq_wit[size_t(q)] = wit;
    }
    std::sort(squares.begin(), squares.end(), [&](int a, int b) {
      if (sq_val[size_t(a)] != sq_val[size_t(b)]) return sq_val[size_t(a)] < sq_val[size_t(b)];
      return a < b;
    });

    // columns keyed by pivot edge position; each column is a descending
    // list of edge positions
    std::vector<std::vector<int>> reduced(size_t(g.n_edge));
    std::vector<int> pivot_owner(size_t(g.n_edge), -1);

    std::vector<int> col, tmp;
    for (int q : squares) {
      col.clear();
      for (int e : g.square_edges(q)) col.push_back(edge_pos[size_t(e)]);
      std::sort(col.rbegin(), col.rend());
      while (!col.empty()) {
        const int piv = col.front();
        if (pivot_owner[size_t(piv)] < 0) break;
        // col ^= reduced[piv] (both sorted descending)
        const auto& other = reduced[size_t(piv)];
        tmp.clear();
        size_t i = 0, j = 0;
        while (i < col.size() || j < other.size()) {
          if (i < col.size() && j < other.size() && col[i] == other[j]) {
            ++i;
            ++j;
          } else if (j >= other.size() || (i < col.size() && col[i] > other[j])) {
            tmp.push_back(col[i++]);
          } else {
            tmp.push_back(other[j++]);
          }
        }
        col.swap(tmp);
      }
      if (col.empty()) continue;  // cannot happen on a full 2-D grid
      const int piv = col.front();
      pivot_owner[size_t(piv)] = q;
      reduced[size_t(piv)] = col;
      const int be = edges[size_t(piv)];
      const double birth = edge_val[size_t(be)];
      const double death = sq_val[size_t(q)];
      if (death > birth) {
        PersistencePoint p;
        p.dim = 1;
        p.birth = birth;
        p.death = death;
        p.birth_pixel = vertex_pixel(edge_wit[size_t(be)], g.W);
        p.death_pixel = vertex_pixel(sq_wit[size_t(q)], g.W);
        out.points.push_back(p);
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------
// brute-force oracle
// ------------------------------------------------------------------

namespace {

// Z2 chain vectors as bit words.
struct BitVec {
  std::vector<uint64_t> w;
  explicit BitVec(int nbits) : w(size_t((nbits + 63) / 64), 0) {}
  void set(int i) { w[size_t(i >> 6)] ^= (uint64_t(1) << (i & 63)); }
  bool any() const {
    for (uint64_t x : w)
      if (x) return true;
    return false;
  }
  int highest() const {
    for (int i = int(w.size()) - 1; i >= 0; --i)
      if (w[size_t(i)]) return i * 64 + 63 - std::countl_zero(w[size_t(i)]);
    return -1;
  }
  void operator^=(const BitVec& o) {
    for (size_t i = 0; i < w.size(); ++i) w[i] ^= o.w[i];
  }
};

// rank of a set of Z2 column vectors (destructive elimination)
int z2_rank(std::vector<BitVec> cols) {
  std::vector<std::pair<int, BitVec>> basis;  // (pivot, column)
  int rank = 0;
  for (auto& c : cols) {
    int h = c.highest();
    while (h >= 0) {
      bool hit = false;
      for (auto& [p, b] : basis) {
        if (p == h) {
          c ^= b;
          h = c.highest();
          hit = true;
          break;
        }
      }
      if (!hit) break;
    }
    if (h >= 0) {
      basis.emplace_back(h, c);
      ++rank;
    }
  }
  return rank;
}

// kernel basis of a Z2 matrix given as columns; returns combination vectors
// over column indices
std::vector<BitVec> z2_kernel(const std::vector<BitVec>& cols, int ncols) {
  std::vector<std::pair<int, std::pair<BitVec, BitVec>>> basis;  // pivot -> (col, combo)
  std::vector<BitVec> kernel;
  for (int ci = 0; ci < ncols; ++ci) {
    BitVec c = cols[size_t(ci)];
    BitVec combo(ncols);
    combo.set(ci);
    int h = c.highest();
    while (h >= 0) {
      bool hit = false;
      for (auto& [p, cb] : basis) {
        if (p == h) {
          c ^= cb.first;
          combo ^= cb.second;
          h = c.highest();
          hit = true;
          break;
        }
      }
      if (!hit) break;
    }
    if (h >= 0) {
      basis.push_back({h, {c, combo}});
    } else {
      kernel.push_back(combo);
    }
  }
  return kernel;
}

}  // namespace

PersistenceDiagram brute_force_pd(const ScalarField& f, double cap) {
  if (size_t(f.rows) * size_t(f.cols) > 49)
    throw UsageError("brute_force_pd: grid larger than 49 pixels");
  check_field(f, cap);
  const GridCells g(f);

  std::vector<double> thresholds(f.v.begin(), f.v.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const int m = int(thresholds.size());

  // cell values
  std::vector<double> edge_val(size_t(g.n_edge)), sq_val(size_t(g.n_square));
  for (int e = 0; e < g.n_edge; ++e) {
    auto [u, v] = g.edge_vertices(e);
    edge_val[size_t(e)] = std::max(f.v[size_t(u)], f.v[size_t(v)]);
  }
  for (int q = 0; q < g.n_square; ++q) {
    auto vs = g.square_vertices(q);
    double mx = f.v[size_t(vs[0])];
    for (int i = 1; i < 4; ++i) mx = std::max(mx, f.v[size_t(vs[i])]);
    sq_val[size_t(q)] = mx;
  }

  // --- persistent rank function for dim 0 ---
  // rank H0(K_i) -> H0(K_j) = number of K_j components meeting V_i
  auto rank0 = [&](int i, int j) {
    const double ti = thresholds[size_t(i)], tj = thresholds[size_t(j)];
    UnionFind uf(g.n_vert);
    for (int e = 0; e < g.n_edge; ++e) {
      if (edge_val[size_t(e)] <= tj) {
        auto [u, v] = g.edge_vertices(e);
        uf.parent[size_t(uf.find(u))] = uf.find(v);
      }
    }
    std::vector<uint8_t> touched(size_t(g.n_vert), 0);
    int count = 0;
    for (int v = 0; v < g.n_vert; ++v) {
      if (f.v[size_t(v)] <= ti) {
        const int r = uf.find(v);
        if (!touched[size_t(r)]) {
          touched[size_t(r)] = 1;
          ++count;
        }
      }
    }
    (void)tj;
    return count;
  };

  // --- persistent rank function for dim 1 ---
  // rank H1(K_i) -> H1(K_j) = dim Z1(K_i) - dim(Z1(K_i) ∩ B1(K_j))
  //                        = dim(Z1(K_i) + B1(K_j)) - dim B1(K_j)
  // kernel bases per threshold, as edge-chain vectors
  std::vector<std::vector<BitVec>> kernels(size_t(m));
  std::vector<std::vector<int>> edge_ids(size_t(m));  // edges present at t_i
  for (int i = 0; i < m; ++i) {
    const double ti = thresholds[size_t(i)];
    std::vector<int> present;
    for (int e = 0; e < g.n_edge; ++e)
      if (edge_val[size_t(e)] <= ti) present.push_back(e);
    std::vector<BitVec> cols;
    cols.reserve(present.size());
    for (int e : present) {
      BitVec c(g.n_vert);
      auto [u, v] = g.edge_vertices(e);
      c.set(u);
      c.set(v);
      cols.push_back(c);
    }
    // kernel combos are over local column indices; remap to global edge ids
    auto local = z2_kernel(cols, int(present.size()));
    std::vector<BitVec> remapped;
    for (const auto& kv : local) {
      BitVec c(g.n_edge);
      for (int li = 0; li < int(present.size()); ++li) {
        if (kv.w[size_t(li >> 6)] >> (li & 63) & 1) c.set(present[size_t(li)]);
      }
      remapped.push_back(c);
    }
    kernels[size_t(i)] = std::move(remapped);
    edge_ids[size_t(i)] = std::move(present);
  }

  std::vector<std::vector<BitVec>> boundaries(size_t(m));  // ∂2 columns present at t_j
  for (int j = 0; j < m; ++j) {
    const double tj = thresholds[size_t(j)];
    for (int q = 0; q < g.n_square; ++q) {
      if (sq_val[size_t(q)] <= tj) {
        BitVec c(g.n_edge);
        for (int e : g.square_edges(q)) c.set(e);
        boundaries[size_t(j)].push_back(c);
      }
    }
  }
  std::vector<int> bdim(size_t(m));
  for (int j = 0; j < m; ++j) bdim[size_t(j)] = z2_rank(boundaries[size_t(j)]);

  auto rank1 = [&](int i, int j) {
    const auto& Z = kernels[size_t(i)];
    std::vector<BitVec> combined = Z;
    for (const auto& b : boundaries[size_t(j)]) combined.push_back(b);
    const int sum_dim = z2_rank(std::move(combined));
    return sum_dim - bdim[size_t(j)];
  };

  // multiplicities from the rank function
  PersistenceDiagram out;
  out.cap = cap;
  for (int dim = 0; dim <= 1; ++dim) {
    auto R = [&](int i, int j) -> int {
      if (i < 0) return 0;
      return dim == 0 ? rank0(i, j) : rank1(i, j);
    };
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const int mult = (R(i, j - 1) - R(i, j)) - (R(i - 1, j - 1) - R(i - 1, j));
        for (int c = 0; c < mult; ++c) {
          PersistencePoint p;
          p.dim = dim;
          p.birth = thresholds[size_t(i)];
          p.death = thresholds[size_t(j)];
          out.points.push_back(p);
        }
      }
      const int ess = R(i, m - 1) - R(i - 1, m - 1);
      for (int c = 0; c < ess; ++c) {
        PersistencePoint p;
        p.dim = dim;
        p.birth = thresholds[size_t(i)];
        p.death = cap;
        p.essential = true;
        out.points.push_back(p);
      }
    }
  }
  return out;
}

int betti_at(const ScalarField& f, double threshold, int dim) {
  double mx = f.v.empty() ? 0.0 : *std::max_element(f.v.begin(), f.v.end());
  const PersistenceDiagram d = sublevel_pd(f, mx + 1.0);
  int count = 0;
  for (const auto& p : d.points)
    if (p.dim == dim && p.birth <= threshold && threshold < p.death) ++count;
  return count;
}

}  // namespace topodiff
