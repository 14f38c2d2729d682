#pragma once

#include <cstdint>
#include <string>

#include "fairdiff/dataset.hpp"

namespace fairdiff {

/// Tallies of a labeled table split by protected group and label.
/// "p"/"up" = privileged/unprivileged, "pos"/"neg" = favorable/unfavorable
/// label; the four intersections are pp, pup, np, nup.
template <typename T>
struct BasicGroupCounts {
  T total{};
  T privileged{};
  T unprivileged{};
  T positive{};
  T negative{};
  T pos_priv{};    // N_pp
  T pos_unpriv{};  // N_pup
  T neg_priv{};    // N_np
  T neg_unpriv{};  // N_nup

  bool operator==(const BasicGroupCounts&) const = default;
};

using GroupCounts = BasicGroupCounts<std::int64_t>;
// Counts where each row contributes its sample weight.
using WeightedGroupCounts = BasicGroupCounts<double>;

struct SampleWeights {
  double pos_priv = 1.0;    // w_pp
  double pos_unpriv = 1.0;  // w_pup
  double neg_priv = 1.0;    // w_np
  double neg_unpriv = 1.0;  // w_nup

  double for_row(bool privileged, bool favorable) const {
    if (favorable) return privileged ? pos_priv : pos_unpriv;
    return privileged ? neg_priv : neg_unpriv;
  }
};

GroupCounts count_groups(const DataTable& table);
WeightedGroupCounts count_groups_weighted(const DataTable& table);

// w_cell = (N_group / N_total) * (N_label / N_cell). Each weight divides by
// its own cell count, which makes the weighted label rate equal across
// groups. Throws DegenerateGroupError naming any empty cell.
SampleWeights compute_weights(const GroupCounts& counts);
SampleWeights compute_weights(const WeightedGroupCounts& counts);

// Copy of `table` with each row's weight set from its (group, label) cell.
DataTable apply_weights(const DataTable& table, const SampleWeights& weights);

// Favorable rate of each group using the row weights.
struct WeightedRates {
  double privileged = 0.0;
  double unprivileged = 0.0;
};
WeightedRates weighted_favorable_rates(const DataTable& table);

// Human-readable counts + weights report for the CLI.
std::string format_report(const TableSchema& schema, const GroupCounts& counts,
                          const SampleWeights& weights);

}  // namespace fairdiff
