#include "network_simplex.hpp"

#include "cotpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cotpi::detail {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Primal network simplex on the bipartite graph sources -> sinks, with an
// artificial root joined to every node. The spanning tree is kept strongly
// feasible (leaving-arc rule of Cunningham), which rules out cycling on
// degenerate pivots.
//
// Node ids: sources [0, n0), sinks [n0, n0 + n1), root n0 + n1.
// Arc ids: real arc (i, j) is i * n1 + j; node u's artificial arc is m + u.
// Potentials satisfy cost(e) = pi[target] - pi[source] on tree arcs, so the
// reduced cost of a non-tree arc is cost(e) + pi[source] - pi[target].
class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   const Eigen::MatrixXd& cost)
      : n0_(supply.size()),
        n1_(demand.size()),
        m_(n0_ * n1_),
        nodes_(n0_ + n1_),
        root_(nodes_),
        cost_(m_),
        flow_(m_ + nodes_, 0.0),
        in_tree_(m_ + nodes_, 0),
        art_source_(nodes_),
        art_target_(nodes_),
        art_cost_(nodes_, 0.0),
        parent_(nodes_ + 1, kNone),
        pred_(nodes_ + 1, kNone),
        up_(nodes_ + 1, 0),
        depth_(nodes_ + 1, 0),
        pi_(nodes_ + 1, 0.0) {
    // Shifting all costs by a constant moves every feasible objective by the
    // same amount (total mass is fixed), and keeps the artificial cost scale
    // meaningful when the input has negative entries.
    const double shift = cost.minCoeff();
    double cmax = 0.0;
    for (std::size_t i = 0; i < n0_; ++i) {
      for (std::size_t j = 0; j < n1_; ++j) {
        const double c = cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - shift;
        cost_[i * n1_ + j] = c;
        cmax = std::max(cmax, c);
      }
    }
    const double artificial = (cmax + 1.0) * static_cast<double>(nodes_ + 1);
    eps_ = 1e-14 * artificial;

    for (std::size_t u = 0; u < nodes_; ++u) {
      const std::size_t e = m_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      in_tree_[e] = 1;
      if (u < n0_) {
        up_[u] = 1;
        art_source_[u] = u;
        art_target_[u] = root_;
        flow_[e] = supply[u];
      } else {
        up_[u] = 0;
        art_source_[u] = root_;
        art_target_[u] = u;
        art_cost_[u] = artificial;
        flow_[e] = demand[u - n0_];
      }
    }
    children_start_.resize(nodes_ + 2);
    children_.resize(nodes_ + 1);
    order_.reserve(nodes_ + 1);
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(double(m_))));
    max_pivots_ = std::max<std::size_t>(1'000'000, 50 * (m_ + nodes_));
  }

  TransportResult run(const Eigen::MatrixXd& original_cost) {
    rebuild_tree();
    std::size_t pivots = 0;
    for (;;) {
      const std::size_t entering = find_entering();
      if (entering == kNone) break;
      if (++pivots > max_pivots_) {
        throw NumericalError("network simplex: pivot limit exceeded");
      }
      pivot(entering);
      rebuild_tree();
    }

    double residual = 0.0;
    for (std::size_t u = 0; u < nodes_; ++u) residual += std::abs(flow_[m_ + u]);
    if (residual > kMarginalTolerance) {
      throw NumericalError("network simplex: supplies and demands are not balanced (residual " +
                           std::to_string(residual) + ")");
    }

    TransportResult result;
    result.pivots = pivots;
    for (std::size_t u = 0; u < nodes_; ++u) {
      const std::size_t e = pred_[u];
      if (e >= m_ || flow_[e] <= 0.0) continue;
      const std::size_t i = e / n1_;
      const std::size_t j = e % n1_;
      result.entries.push_back({i, j, flow_[e]});
    }
    std::sort(result.entries.begin(), result.entries.end(), [](const auto& a, const auto& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    for (const auto& entry : result.entries) {
      result.value += entry.mass * original_cost(static_cast<Eigen::Index>(entry.source),
                                                 static_cast<Eigen::Index>(entry.target));
    }
    return result;
  }

 private:
  std::size_t source(std::size_t e) const { return e < m_ ? e / n1_ : art_source_[e - m_]; }
  std::size_t target(std::size_t e) const { return e < m_ ? n0_ + e % n1_ : art_target_[e - m_]; }

  // Block search pricing over the real arcs.
  std::size_t find_entering() {
    double best = -eps_;
    std::size_t chosen = kNone;
    std::size_t remaining = block_;
    for (std::size_t k = 0; k < m_; ++k) {
      const std::size_t e = next_arc_ + k < m_ ? next_arc_ + k : next_arc_ + k - m_;
      if (!in_tree_[e]) {
        const std::size_t i = e / n1_;
        const std::size_t j = n0_ + e % n1_;
        const double reduced = cost_[e] + pi_[i] - pi_[j];
        if (reduced < best) {
          best = reduced;
          chosen = e;
        }
      }
      if (--remaining == 0) {
        if (chosen != kNone) {
          next_arc_ = e + 1 == m_ ? 0 : e + 1;
          return chosen;
        }
        remaining = block_;
      }
    }
    return chosen;
  }

  std::size_t find_join(std::size_t u, std::size_t v) const {
    while (u != v) {
      if (depth_[u] > depth_[v]) {
        u = parent_[u];
      } else if (depth_[v] > depth_[u]) {
        v = parent_[v];
      } else {
        u = parent_[u];
        v = parent_[v];
      }
    }
    return u;
  }

  void pivot(std::size_t entering) {
    const std::size_t first = source(entering);
    const std::size_t second = target(entering);
    const std::size_t join = find_join(first, second);

    // Flow is pushed first -> second along the entering arc, then back to
    // `first` around the tree path. Arcs traversed against their orientation
    // lose flow; uncapacitated arcs traversed along it never block.
    double delta = std::numeric_limits<double>::infinity();
    std::size_t leaving_node = kNone;
    int side = 0;
    for (std::size_t u = first; u != join; u = parent_[u]) {
      if (up_[u] && flow_[pred_[u]] < delta) {
        delta = flow_[pred_[u]];
        leaving_node = u;
        side = 1;
      }
    }
    for (std::size_t u = second; u != join; u = parent_[u]) {
      if (!up_[u] && flow_[pred_[u]] <= delta) {
        delta = flow_[pred_[u]];
        leaving_node = u;
        side = 2;
      }
    }
    if (side == 0) throw NumericalError("network simplex: unbounded pivot");

    if (delta > 0.0) {
      flow_[entering] += delta;
      for (std::size_t u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? -delta : delta;
      }
      for (std::size_t u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? delta : -delta;
      }
    }

    const std::size_t leaving = pred_[leaving_node];
    flow_[leaving] = 0.0;
    in_tree_[leaving] = 0;
    in_tree_[entering] = 1;

    // Re-hang the subtree cut off by the leaving arc from the entering arc:
    // reverse parent pointers on the path from the entering endpoint inside
    // that subtree up to `leaving_node`.
    const std::size_t inside = side == 1 ? first : second;
    const std::size_t outside = side == 1 ? second : first;
    std::size_t prev = outside;
    std::size_t prev_arc = entering;
    std::size_t cur = inside;
    for (;;) {
      const std::size_t next = parent_[cur];
      const std::size_t next_arc = pred_[cur];
      parent_[cur] = prev;
      pred_[cur] = prev_arc;
      up_[cur] = source(prev_arc) == cur ? 1 : 0;
      if (cur == leaving_node) break;
      prev = cur;
      prev_arc = next_arc;
      cur = next;
    }
  }

  // Recomputes depth and potentials from the parent pointers.
  void rebuild_tree() {
    std::fill(children_start_.begin(), children_start_.end(), 0);
    for (std::size_t u = 0; u < nodes_; ++u) ++children_start_[parent_[u] + 1];
    for (std::size_t u = 0; u <= nodes_; ++u) children_start_[u + 1] += children_start_[u];
    fill_pos_.assign(children_start_.begin(), children_start_.end() - 1);
    for (std::size_t u = 0; u < nodes_; ++u) children_[fill_pos_[parent_[u]]++] = u;

    order_.clear();
    order_.push_back(root_);
    depth_[root_] = 0;
    pi_[root_] = 0.0;
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const std::size_t p = order_[k];
      for (std::size_t c = children_start_[p]; c < children_start_[p + 1]; ++c) {
        const std::size_t u = children_[c];
        const std::size_t e = pred_[u];
        const double arc_cost = e < m_ ? cost_[e] : art_cost_[e - m_];
        depth_[u] = depth_[p] + 1;
        pi_[u] = up_[u] ? pi_[p] - arc_cost : pi_[p] + arc_cost;
        order_.push_back(u);
      }
    }
    if (order_.size() != nodes_ + 1) throw NumericalError("network simplex: spanning tree broken");
  }

  std::size_t n0_, n1_, m_, nodes_, root_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<std::size_t> art_source_, art_target_;
  std::vector<double> art_cost_;
  std::vector<std::size_t> parent_, pred_;
  std::vector<char> up_;
  std::vector<std::size_t> depth_;
  std::vector<double> pi_;
  std::vector<std::size_t> children_start_, children_, fill_pos_, order_;
  std::size_t block_ = 10;
  std::size_t next_arc_ = 0;
  std::size_t max_pivots_ = 0;
  double eps_ = 0.0;
};

}  // namespace

TransportResult network_simplex(std::span<const double> supply, std::span<const double> demand,
                                const Eigen::MatrixXd& cost) {
  TransportSimplex simplex(supply, demand, cost);
  return simplex.run(cost);
}

}  // namespace cotpi::detail
