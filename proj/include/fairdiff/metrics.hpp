#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "fairdiff/dataset.hpp"

namespace fairdiff {

// Sentinels. DI reports +inf when only the privileged rate is zero and NaN
// (undefined) for 0/0; TI reports NaN when mu = 0.
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();
inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct GroupConfusion {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double tpr = 0.0, fpr = 0.0, tnr = 0.0;
  // Set when a rate had a zero denominator and was defined as 0.
  bool tpr_degenerate = false;
  bool fpr_degenerate = false;

  std::int64_t size() const { return tp + fp + tn + fn; }
};

struct ConfusionRates {
  GroupConfusion privileged;
  GroupConfusion unprivileged;
};

// Favorable-prediction rates per group.
struct RateSummary {
  double p_unprivileged = 0.0;  // p_pup
  double p_privileged = 0.0;    // p_pp
};

GroupConfusion confusion(std::span<const int> y_true, std::span<const int> y_pred);
ConfusionRates confusion_by_group(std::span<const int> y_true, std::span<const int> y_pred,
                                  std::span<const int> privileged);
RateSummary rate_summary(std::span<const int> y_pred, std::span<const int> privileged);

double disparate_impact(const RateSummary& r);
double statistical_parity_difference(const RateSummary& r);
double average_odds_difference(const ConfusionRates& c);
double equal_opportunity_difference(const ConfusionRates& c);
double theil_index(std::span<const int> y_true, std::span<const int> y_pred);
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

enum class Verdict { kFair, kUnfair, kUndefined };
const char* to_string(Verdict v);

Verdict spd_verdict(double spd);
Verdict aod_verdict(double aod);
Verdict eod_verdict(double eod);
Verdict di_verdict(double di);
Verdict ti_verdict(double ti);

struct FairnessReport {
  double ba = 0.0;
  double spd = 0.0;
  double aod = 0.0;
  double di = 0.0;
  double eod = 0.0;
  double ti = 0.0;
  Verdict spd_verdict = Verdict::kUndefined;
  Verdict aod_verdict = Verdict::kUndefined;
  Verdict di_verdict = Verdict::kUndefined;
  Verdict eod_verdict = Verdict::kUndefined;
  Verdict ti_verdict = Verdict::kUndefined;
  ConfusionRates rates;
  RateSummary summary;
};

// Throws GroupAbsentError when a protected group has no rows.
FairnessReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                        std::span<const int> privileged);
FairnessReport evaluate(const DataTable& test, std::span<const int> y_pred);

// One record per metric: name, value, verdict.
std::string format_report(const FairnessReport& report);

}  // namespace fairdiff
