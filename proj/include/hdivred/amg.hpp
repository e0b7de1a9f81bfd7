#ifndef HDIVRED_AMG_HPP
#define HDIVRED_AMG_HPP

#include <memory>
#include <vector>

#include "hdivred/csr.hpp"
#include "hdivred/solvers.hpp"

namespace hdivred {

struct AmgOptions {
  double strength_threshold = 0.08;   // |a_ij| >= theta sqrt(a_ii a_jj)
  double omega_factor = 1.0;          // smoothing weight = factor / rho(D^-1 A)
  index_t coarse_cap = 64;
  int max_levels = 25;
  double stall_ratio = 0.9;           // stop coarsening when nc/n exceeds this
  int power_iterations = 10;
};

/// Smoothed-aggregation hierarchy built from the single constant
/// near-nullspace vector. levels[l].prolongator maps level l+1 to level l;
/// the coarsest matrix is factored densely.
struct AmgHierarchy {
  struct Level {
    CsrMatrix matrix;
    CsrMatrix prolongator;
    CsrMatrix restriction;  // transpose of prolongator
    std::vector<double> inv_diag;
  };
  std::vector<Level> levels;
  CsrMatrix coarse_matrix;
  LuFactors coarse_lu;
  std::vector<double> near_nullspace;  // constant vector on the fine level

  index_t fine_size() const { return levels.empty() ? coarse_matrix.nrows : levels.front().matrix.nrows; }
};

AmgHierarchy amg_setup(const CsrMatrix& a, const AmgOptions& options = {});

/// One V(1,1) cycle: forward Gauss-Seidel pre-smoothing, backward
/// post-smoothing, exact coarsest solve. Symmetric as an operator.
std::vector<double> amg_apply(const AmgHierarchy& h, const std::vector<double>& r);

class AmgPreconditioner final : public Preconditioner {
 public:
  explicit AmgPreconditioner(AmgHierarchy hierarchy) : hierarchy_(std::move(hierarchy)) {}
  index_t size() const override { return hierarchy_.fine_size(); }
  void apply(const std::vector<double>& r, std::vector<double>& z) const override { z = amg_apply(hierarchy_, r); }
  const AmgHierarchy& hierarchy() const { return hierarchy_; }

 private:
  AmgHierarchy hierarchy_;
};

std::unique_ptr<Preconditioner> amg_preconditioner(const CsrMatrix& a, const AmgOptions& options = {});

}  // namespace hdivred

#endif
