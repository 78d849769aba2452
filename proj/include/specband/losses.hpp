#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "specband/autodiff.hpp"

namespace specband {

// One (classification, consistency) pair of loss values. Band index 0 is
// reserved for the unfiltered original-image pair.
struct BandLossTerms {
  int band_index = 0;
  double cls = 0.0;
  double cons = 0.0;
};

// Recorded components of the summed training loss
// L = sum_i (L_cls_i + alpha * L_cons_i).
struct LossBreakdown {
  std::vector<BandLossTerms> per_band;        // band indices 1..K
  std::optional<BandLossTerms> original_pair; // band index 0, when enabled
  double alpha = 0.0;
  double total = 0.0;

  // Recomputes the sum from the stored components; used by the bookkeeping
  // invariant tests.
  double recompute_total() const {
    double t = 0.0;
    for (const auto& b : per_band) t += b.cls + alpha * b.cons;
    if (original_pair) t += original_pair->cls + alpha * original_pair->cons;
    return t;
  }
};

struct TotalLossResult {
  Tensor node;  // scalar tape node
  LossBreakdown breakdown;
};

// Sums per-band (L_cls, L_cons) scalar nodes into the training loss node.
// Terms are indexed 1..K in input order.
TotalLossResult total_loss(Tape& tape,
                           const std::vector<std::pair<Tensor, Tensor>>& terms,
                           double alpha);

}  // namespace specband
