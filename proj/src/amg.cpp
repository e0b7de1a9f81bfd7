#include "hdivred/amg.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <cstddef>

#include "hdivred/errors.hpp"

namespace hdivred {

namespace {

std::vector<double> diagonal(const CsrMatrix& a) {
  std::vector<double> d(static_cast<std::size_t>(a.nrows), 0.0);
  for (index_t i = 0; i < a.nrows; ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (cols[k] == i) d[static_cast<std::size_t>(i)] = vals[k];
  }
  return d;
}

// Strength graph: j is a strong neighbor of i when
// |a_ij| >= theta sqrt(a_ii a_jj), i != j.
CsrMatrix strength_graph(const CsrMatrix& a, double theta) {
  const std::vector<double> d = diagonal(a);
  CsrMatrix s(a.nrows, a.ncols);
  for (index_t i = 0; i < a.nrows; ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const index_t j = cols[k];
      if (j == i) continue;
      const double dd = d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
      if (dd > 0.0 && std::abs(vals[k]) >= theta * std::sqrt(dd)) {
        s.col_indices.push_back(j);
        s.values.push_back(1.0);
      }
    }
    s.row_offsets[static_cast<std::size_t>(i) + 1] = static_cast<index_t>(s.col_indices.size());
  }
  return s;
}

// Greedy aggregation over the strength graph: seeds in ascending index order
// swallow their whole strong neighborhood; leftovers attach to the
// lowest-index adjacent aggregate; isolated nodes become singletons.
std::vector<index_t> aggregate(const CsrMatrix& strength, index_t& n_aggregates) {
  const index_t n = strength.nrows;
  std::vector<index_t> agg(static_cast<std::size_t>(n), -1);
  index_t next = 0;

  for (index_t i = 0; i < n; ++i) {
    if (agg[static_cast<std::size_t>(i)] != -1) continue;
    auto nbrs = strength.row_cols(i);
    if (nbrs.empty()) continue;  // handled in the singleton pass
    bool free = true;
    for (index_t j : nbrs)
      if (agg[static_cast<std::size_t>(j)] != -1) {
        free = false;
        break;
      }
    if (!free) continue;
    agg[static_cast<std::size_t>(i)] = next;
    for (index_t j : nbrs) agg[static_cast<std::size_t>(j)] = next;
    ++next;
  }
  for (index_t i = 0; i < n; ++i) {
    if (agg[static_cast<std::size_t>(i)] != -1) continue;
    index_t best = -1;
    for (index_t j : strength.row_cols(i)) {
      const index_t a = agg[static_cast<std::size_t>(j)];
      if (a != -1 && (best == -1 || a < best)) best = a;
    }
    if (best != -1) agg[static_cast<std::size_t>(i)] = best;
  }
  for (index_t i = 0; i < n; ++i) {
    if (agg[static_cast<std::size_t>(i)] == -1) agg[static_cast<std::size_t>(i)] = next++;
  }
  n_aggregates = next;
  return agg;
}

// Upper estimate of rho(D^-1 A) by a fixed-length power iteration from a
// deterministic pseudorandom start (a smooth start like the constant vector
// badly underestimates the dominant high-frequency mode), inflated by a
// standard 10% safety margin.
double spectral_bound(const CsrMatrix& a, const std::vector<double>& inv_diag, int iterations) {
  // caller applies the safety inflation
  std::vector<double> v(static_cast<std::size_t>(a.nrows));
  std::uint64_t state = 0x2545f4914f6cdd1dull;
  double norm0 = 0.0;
  for (auto& x : v) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    x = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    norm0 += x * x;
  }
  norm0 = std::sqrt(norm0);
  for (auto& x : v) x /= norm0;

  double lambda = 1.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> w = spmv(a, v);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= inv_diag[i];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 1.0;
    lambda = norm;  // ||v|| = 1 from the previous normalization
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

// Weak couplings are lumped into the diagonal before smoothing so tentative
// basis functions do not leak across coefficient jumps.
CsrMatrix filtered_matrix(const CsrMatrix& a, const CsrMatrix& strength) {
  CsrMatrix f(a.nrows, a.ncols);
  std::vector<char> keep(static_cast<std::size_t>(a.ncols), 0);
  for (index_t i = 0; i < a.nrows; ++i) {
    for (index_t j : strength.row_cols(i)) keep[static_cast<std::size_t>(j)] = 1;
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    double lumped = 0.0;
    std::size_t diag_pos = std::string::npos;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i) {
        f.col_indices.push_back(i);
        f.values.push_back(vals[k]);
        diag_pos = f.values.size() - 1;
      } else if (keep[static_cast<std::size_t>(cols[k])]) {
        f.col_indices.push_back(cols[k]);
        f.values.push_back(vals[k]);
      } else {
        lumped += vals[k];
      }
    }
    // keep the original diagonal when lumping would destroy positivity
    if (diag_pos != std::string::npos && f.values[diag_pos] + lumped > 0.0) f.values[diag_pos] += lumped;
    f.row_offsets[static_cast<std::size_t>(i) + 1] = static_cast<index_t>(f.col_indices.size());
    for (index_t j : strength.row_cols(i)) keep[static_cast<std::size_t>(j)] = 0;
  }
  return f;
}

// P = (I - omega D^-1 A_filtered) P_tent
CsrMatrix smooth_prolongator(const CsrMatrix& a, const CsrMatrix& p_tent,
                             const std::vector<double>& inv_diag, double omega) {
  const CsrMatrix ap = triple_product(CsrMatrix::identity(a.nrows), a, p_tent);
  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  rows.reserve(static_cast<std::size_t>(p_tent.nnz() + ap.nnz()));
  cols.reserve(rows.capacity());
  vals.reserve(rows.capacity());
  for (index_t i = 0; i < p_tent.nrows; ++i) {
    auto pc = p_tent.row_cols(i);
    auto pv = p_tent.row_vals(i);
    for (std::size_t k = 0; k < pc.size(); ++k) {
      rows.push_back(i);
      cols.push_back(pc[k]);
      vals.push_back(pv[k]);
    }
    auto sc = ap.row_cols(i);
    auto sv = ap.row_vals(i);
    for (std::size_t k = 0; k < sc.size(); ++k) {
      rows.push_back(i);
      cols.push_back(sc[k]);
      vals.push_back(-omega * inv_diag[static_cast<std::size_t>(i)] * sv[k]);
    }
  }
  return CsrMatrix::from_triplets(p_tent.nrows, p_tent.ncols, rows, cols, vals);
}

std::vector<double> checked_inv_diag(const CsrMatrix& a) {
  std::vector<double> d = diagonal(a);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw SetupFailed("amg_setup: non-positive diagonal at row " + std::to_string(i));
    d[i] = 1.0 / d[i];
  }
  return d;
}

}  // namespace

AmgHierarchy amg_setup(const CsrMatrix& a, const AmgOptions& options) {
  if (a.nrows != a.ncols) throw SetupFailed("amg_setup: matrix not square");
  AmgHierarchy h;
  h.near_nullspace.assign(static_cast<std::size_t>(a.nrows), 1.0);

  CsrMatrix current = a;
  for (int level = 0; level < options.max_levels; ++level) {
    const index_t n = current.nrows;
    if (n < options.coarse_cap) break;  // a level exactly at the cap still coarsens once

    // A stalled level that is still large would push an oversized matrix
    // into the coarsest direct solve, so weaken the strength threshold
    // until the graph connects enough to keep coarsening.
    CsrMatrix strength;
    index_t nc = 0;
    std::vector<index_t> agg;
    double theta = options.strength_threshold;
    for (int attempt = 0; attempt < 6; ++attempt) {
      strength = strength_graph(current, theta);
      agg = aggregate(strength, nc);
      if (nc > 0 && static_cast<double>(nc) <= options.stall_ratio * static_cast<double>(n)) break;
      theta *= 0.25;
    }
    if (nc == 0) throw SetupFailed("amg_setup: empty coarse level");
    if (static_cast<double>(nc) > options.stall_ratio * static_cast<double>(n)) break;  // coarsening stalled
    if (nc >= n) throw SetupFailed("amg_setup: non-decreasing coarse size");

    // Tentative prolongator from the constant vector, column-normalized.
    std::vector<index_t> agg_size(static_cast<std::size_t>(nc), 0);
    for (index_t i = 0; i < n; ++i) agg_size[static_cast<std::size_t>(agg[static_cast<std::size_t>(i)])] += 1;
    CsrMatrix p_tent(n, nc);
    p_tent.col_indices.resize(static_cast<std::size_t>(n));
    p_tent.values.resize(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) {
      const index_t ai = agg[static_cast<std::size_t>(i)];
      p_tent.col_indices[static_cast<std::size_t>(i)] = ai;
      p_tent.values[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(agg_size[static_cast<std::size_t>(ai)]));
      p_tent.row_offsets[static_cast<std::size_t>(i) + 1] = i + 1;
    }

    AmgHierarchy::Level lvl;
    lvl.inv_diag = checked_inv_diag(current);
    const CsrMatrix filtered = filtered_matrix(current, strength);
    std::vector<double> filtered_inv_diag = checked_inv_diag(filtered);
    const double rho = spectral_bound(filtered, filtered_inv_diag, options.power_iterations);
    const double omega = options.omega_factor / rho;
    lvl.prolongator = smooth_prolongator(filtered, p_tent, filtered_inv_diag, omega);
    lvl.restriction = transpose(lvl.prolongator);
    lvl.matrix = std::move(current);

    current = triple_product(lvl.restriction, lvl.matrix, lvl.prolongator);
    h.levels.push_back(std::move(lvl));
  }

  h.coarse_matrix = std::move(current);
  h.coarse_lu = lu_factor(to_dense(h.coarse_matrix));
  return h;
}

namespace {

std::vector<double> v_cycle(const AmgHierarchy& h, std::size_t level, const std::vector<double>& r) {
  if (level == h.levels.size()) return lu_solve(h.coarse_lu, r);

  const auto& lvl = h.levels[level];
  std::vector<double> z(r.size(), 0.0);
  gauss_seidel_forward(lvl.matrix, r, z);

  std::vector<double> residual = spmv(lvl.matrix, z);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = r[i] - residual[i];
  const std::vector<double> coarse_r = spmv(lvl.restriction, residual);
  const std::vector<double> coarse_z = v_cycle(h, level + 1, coarse_r);
  const std::vector<double> correction = spmv(lvl.prolongator, coarse_z);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += correction[i];

  gauss_seidel_backward(lvl.matrix, r, z);
  return z;
}

}  // namespace

std::vector<double> amg_apply(const AmgHierarchy& h, const std::vector<double>& r) {
  if (static_cast<index_t>(r.size()) != h.fine_size()) throw DimensionMismatch("amg_apply: vector length");
  return v_cycle(h, 0, r);
}

std::unique_ptr<Preconditioner> amg_preconditioner(const CsrMatrix& a, const AmgOptions& options) {
  return std::make_unique<AmgPreconditioner>(amg_setup(a, options));
}

}  // namespace hdivred
