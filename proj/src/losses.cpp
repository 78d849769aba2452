#include "specband/losses.hpp"

namespace specband {

TotalLossResult total_loss(Tape& tape, const std::vector<std::pair<Tensor, Tensor>>& terms,
                           double alpha) {
  if (terms.empty()) throw invalid_input("total_loss: no loss terms");
  if (alpha < 0.0) throw invalid_input("total_loss: alpha must be non-negative");

  TotalLossResult res;
  res.breakdown.alpha = alpha;
  Tensor acc;
  int band = 1;
  for (const auto& [cls, cons] : terms) {
    Tensor term = alpha == 0.0 ? cls : tape.add(cls, tape.scale(cons, alpha));
    acc = acc ? tape.add(acc, term) : term;
    res.breakdown.per_band.push_back({band++, cls->value[0], cons->value[0]});
  }
  res.node = acc;
  res.breakdown.total = acc->value[0];
  return res;
}

}  // namespace specband
