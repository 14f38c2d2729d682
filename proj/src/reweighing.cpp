#include "fairdiff/reweighing.hpp"

#include <iomanip>
#include <sstream>

#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

template <typename T, typename RowWeight>
BasicGroupCounts<T> tally(const DataTable& table, RowWeight row_weight) {
  BasicGroupCounts<T> c;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const T w = row_weight(r);
    const bool priv = table.is_privileged(r);
    const bool fav = table.is_favorable(r);
    c.total += w;
    (priv ? c.privileged : c.unprivileged) += w;
    (fav ? c.positive : c.negative) += w;
    if (fav) {
      (priv ? c.pos_priv : c.pos_unpriv) += w;
    } else {
      (priv ? c.neg_priv : c.neg_unpriv) += w;
    }
  }
  return c;
}

template <typename T>
SampleWeights weights_from(const BasicGroupCounts<T>& c) {
  if (!(c.total > T{})) throw PreconditionError("reweighing needs a nonempty table");
  auto check = [](T cell, const char* name) {
    if (!(cell > T{})) throw DegenerateGroupError(std::string("empty reweighing cell ") + name);
  };
  check(c.pos_priv, "N_pp (favorable, privileged)");
  check(c.pos_unpriv, "N_pup (favorable, unprivileged)");
  check(c.neg_priv, "N_np (unfavorable, privileged)");
  check(c.neg_unpriv, "N_nup (unfavorable, unprivileged)");

  const auto d = [](T v) { return static_cast<double>(v); };
  const double total = d(c.total);
  SampleWeights w;
  w.pos_priv = d(c.privileged) / total * (d(c.positive) / d(c.pos_priv));
  w.pos_unpriv = d(c.unprivileged) / total * (d(c.positive) / d(c.pos_unpriv));
  w.neg_priv = d(c.privileged) / total * (d(c.negative) / d(c.neg_priv));
  w.neg_unpriv = d(c.unprivileged) / total * (d(c.negative) / d(c.neg_unpriv));
  return w;
}

}  // namespace

GroupCounts count_groups(const DataTable& table) {
  return tally<std::int64_t>(table, [](std::size_t) { return std::int64_t{1}; });
}

WeightedGroupCounts count_groups_weighted(const DataTable& table) {
  return tally<double>(table, [&](std::size_t r) { return table.weight(r); });
}

SampleWeights compute_weights(const GroupCounts& counts) { return weights_from(counts); }
SampleWeights compute_weights(const WeightedGroupCounts& counts) { return weights_from(counts); }

DataTable apply_weights(const DataTable& table, const SampleWeights& weights) {
  DataTable out = table;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    out.set_weight(r, weights.for_row(out.is_privileged(r), out.is_favorable(r)));
  }
  return out;
}

WeightedRates weighted_favorable_rates(const DataTable& table) {
  const WeightedGroupCounts c = count_groups_weighted(table);
  WeightedRates rates;
  if (c.privileged > 0.0) rates.privileged = c.pos_priv / c.privileged;
  if (c.unprivileged > 0.0) rates.unprivileged = c.pos_unpriv / c.unprivileged;
  return rates;
}

std::string format_report(const TableSchema& schema, const GroupCounts& c, const SampleWeights& w) {
  std::ostringstream os;
  os << "protected_attribute: " << schema.protected_attribute() << '\n'
     << "privileged_value: " << schema.privileged_value() << '\n'
     << "label: " << schema.label_column() << '\n'
     << "favorable_value: " << schema.favorable_value() << '\n'
     << "counts:\n"
     << "  N_total: " << c.total << '\n'
     << "  N_p: " << c.privileged << '\n'
     << "  N_up: " << c.unprivileged << '\n'
     << "  N_pos: " << c.positive << '\n'
     << "  N_neg: " << c.negative << '\n'
     << "  N_pp: " << c.pos_priv << '\n'
     << "  N_pup: " << c.pos_unpriv << '\n'
     << "  N_np: " << c.neg_priv << '\n'
     << "  N_nup: " << c.neg_unpriv << '\n'
     << std::setprecision(10) << "weights:\n"
     << "  w_pp: " << w.pos_priv << '\n'
     << "  w_pup: " << w.pos_unpriv << '\n'
     << "  w_np: " << w.neg_priv << '\n'
     << "  w_nup: " << w.neg_unpriv << '\n';
  return os.str();
}

}  // namespace fairdiff
