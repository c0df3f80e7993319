#pragma once

#include "offdiag/error.hpp"

namespace offdiag {

/// Thresholds used by every certified check. Defaults are the documented,
/// release-stable values; gap_factor is the certification bar for rank gaps.
struct ToleranceProfile {
  double rank_rel_tol = 1e-8;
  double normality_rel_tol = 1e-10;
  double gap_factor = 1e3;
  double eig_distinct_rel_tol = 1e-6;

  void validate() const {
    if (!(rank_rel_tol > 0.0) || !(normality_rel_tol > 0.0) || !(eig_distinct_rel_tol > 0.0))
      fail(ErrorKind::InvalidInput, "tolerances must be strictly positive");
    if (!(gap_factor > 1.0))
      fail(ErrorKind::InvalidInput, "gap_factor must exceed 1");
  }
};

} // namespace offdiag
