#include "fairdiff/metrics.hpp"

#include <cmath>
#include <sstream>

#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

void check_binary(std::span<const int> v, const char* what) {
  for (int x : v) {
    if (x != 0 && x != 1) throw PreconditionError(std::string(what) + " must be binary (0/1)");
  }
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw PreconditionError("label and prediction lengths differ");
}

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
  degenerate = den == 0;
  return degenerate ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

Verdict band(double v, double lo, double hi) {
  if (std::isnan(v)) return Verdict::kUndefined;
  return (v >= lo && v <= hi) ? Verdict::kFair : Verdict::kUnfair;
}

}  // namespace

GroupConfusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  check_sizes(y_true.size(), y_pred.size());
  GroupConfusion g;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) {
      (y_pred[i] ? g.tp : g.fn)++;
    } else {
      (y_pred[i] ? g.fp : g.tn)++;
    }
  }
  g.tpr = ratio(g.tp, g.tp + g.fn, g.tpr_degenerate);
  g.fpr = ratio(g.fp, g.fp + g.tn, g.fpr_degenerate);
  bool unused = false;
  g.tnr = ratio(g.tn, g.fp + g.tn, unused);
  return g;
}

ConfusionRates confusion_by_group(std::span<const int> y_true, std::span<const int> y_pred,
                                  std::span<const int> privileged) {
  check_sizes(y_true.size(), y_pred.size());
  check_sizes(y_true.size(), privileged.size());
  std::vector<int> yt[2], yp[2];
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int g = privileged[i] ? 1 : 0;
    yt[g].push_back(y_true[i]);
    yp[g].push_back(y_pred[i]);
  }
  return ConfusionRates{confusion(yt[1], yp[1]), confusion(yt[0], yp[0])};
}

RateSummary rate_summary(std::span<const int> y_pred, std::span<const int> privileged) {
  check_sizes(y_pred.size(), privileged.size());
  std::int64_t n[2] = {0, 0}, pos[2] = {0, 0};
  for (std::size_t i = 0; i < y_pred.size(); ++i) {
    const int g = privileged[i] ? 1 : 0;
    ++n[g];
    pos[g] += y_pred[i] ? 1 : 0;
  }
  bool unused = false;
  return RateSummary{ratio(pos[0], n[0], unused), ratio(pos[1], n[1], unused)};
}

double disparate_impact(const RateSummary& r) {
  if (r.p_privileged == 0.0) return r.p_unprivileged > 0.0 ? kInfinite : kUndefined;
  return r.p_unprivileged / r.p_privileged;
}

double statistical_parity_difference(const RateSummary& r) { return r.p_unprivileged - r.p_privileged; }

double average_odds_difference(const ConfusionRates& c) {
  return ((c.unprivileged.fpr - c.privileged.fpr) + (c.unprivileged.tpr - c.privileged.tpr)) / 2.0;
}

double equal_opportunity_difference(const ConfusionRates& c) {
  return c.unprivileged.tpr - c.privileged.tpr;
}

double theil_index(std::span<const int> y_true, std::span<const int> y_pred) {
  check_sizes(y_true.size(), y_pred.size());
  check_binary(y_true, "y_true");
  check_binary(y_pred, "y_pred");
  if (y_true.empty()) return kUndefined;
  // b_i takes values in {0, 1, 2}; tally them so the sum is order-free.
  std::int64_t count[3] = {0, 0, 0};
  for (std::size_t i = 0; i < y_true.size(); ++i) ++count[y_pred[i] - y_true[i] + 1];
  const double n = static_cast<double>(y_true.size());
  const double mu = static_cast<double>(count[1] + 2 * count[2]) / n;
  if (mu == 0.0) return kUndefined;
  double sum = 0.0;
  for (int b = 1; b <= 2; ++b) {
    if (count[b] == 0) continue;
    const double ratio_b = b / mu;
    sum += static_cast<double>(count[b]) * ratio_b * std::log(ratio_b);
  }
  return sum / n;
}

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  check_binary(y_true, "y_true");
  check_binary(y_pred, "y_pred");
  const GroupConfusion g = confusion(y_true, y_pred);
  if (g.tp + g.fn == 0 || g.tn + g.fp == 0)
    throw PreconditionError("balanced accuracy needs both classes in y_true");
  return (g.tpr + g.tnr) / 2.0;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kFair: return "fair";
    case Verdict::kUnfair: return "unfair";
    case Verdict::kUndefined: return "undefined";
  }
  return "undefined";
}

Verdict spd_verdict(double spd) { return band(spd, -0.10, 0.10); }
Verdict aod_verdict(double aod) { return band(aod, -0.10, 0.10); }
// The published band for EOD is misprinted as [0.10, 0.10]; it follows SPD/AOD.
Verdict eod_verdict(double eod) { return band(eod, -0.10, 0.10); }
Verdict di_verdict(double di) { return band(di, 0.80, 1.20); }
Verdict ti_verdict(double ti) { return band(ti, 0.0, 0.25); }

FairnessReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                        std::span<const int> privileged) {
  check_sizes(y_true.size(), y_pred.size());
  check_sizes(y_true.size(), privileged.size());
  check_binary(y_pred, "y_pred");
  std::size_t n_priv = 0;
  for (int p : privileged) n_priv += p ? 1 : 0;
  if (n_priv == 0) throw GroupAbsentError("evaluation split has no privileged rows");
  if (n_priv == privileged.size()) throw GroupAbsentError("evaluation split has no unprivileged rows");

  FairnessReport r;
  r.rates = confusion_by_group(y_true, y_pred, privileged);
  r.summary = rate_summary(y_pred, privileged);
  r.ba = balanced_accuracy(y_true, y_pred);
  r.spd = statistical_parity_difference(r.summary);
  r.aod = average_odds_difference(r.rates);
  r.di = disparate_impact(r.summary);
  r.eod = equal_opportunity_difference(r.rates);
  r.ti = theil_index(y_true, y_pred);
  r.spd_verdict = fairdiff::spd_verdict(r.spd);
  r.aod_verdict = fairdiff::aod_verdict(r.aod);
  r.di_verdict = fairdiff::di_verdict(r.di);
  r.eod_verdict = fairdiff::eod_verdict(r.eod);
  r.ti_verdict = fairdiff::ti_verdict(r.ti);
  return r;
}

FairnessReport evaluate(const DataTable& test, std::span<const int> y_pred) {
  if (y_pred.size() != test.rows()) throw PreconditionError("prediction count does not match the test rows");
  const auto y = test.labels();
  const auto g = test.privileged_flags();
  return evaluate(y, y_pred, g);
}

std::string format_report(const FairnessReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "BA " << r.ba << '\n'
     << "SPD " << r.spd << ' ' << to_string(r.spd_verdict) << '\n'
     << "AOD " << r.aod << ' ' << to_string(r.aod_verdict) << '\n'
     << "DI " << r.di << ' ' << to_string(r.di_verdict) << '\n'
     << "EOD " << r.eod << ' ' << to_string(r.eod_verdict) << '\n'
     << "TI " << r.ti << ' ' << to_string(r.ti_verdict) << '\n';
  return os.str();
}

}  // namespace fairdiff
