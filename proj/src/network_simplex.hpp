#pragma once

#include "cotpi/ot.hpp"

#include <span>

namespace cotpi::detail {

struct TransportResult {
  double value = 0.0;
  std::vector<CouplingEntry> entries;
  std::size_t pivots = 0;
};

/// Solves the balanced transportation problem with strictly positive
/// supplies and demands. `supply` and `demand` must have equal totals up to
/// round-off; the residual is absorbed by the artificial root arcs and
/// reported as a NumericalError if it exceeds kMarginalTolerance.
TransportResult network_simplex(std::span<const double> supply, std::span<const double> demand,
                                const Eigen::MatrixXd& cost);

}  // namespace cotpi::detail
