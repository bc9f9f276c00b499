#include "d2dto/contact_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace d2dto {

namespace {

// Poisson pmf in log space (log-gamma for the factorial) so large counts do
// not overflow; the result is clamped to [0, 1].
double poisson_pmf(double mean, int count) {
  if (mean == 0.0) {
    return count == 0 ? 1.0 : 0.0;
  }
  const double log_p = -mean + static_cast<double>(count) * std::log(mean) -
                       std::lgamma(static_cast<double>(count) + 1.0);
  return std::clamp(std::exp(log_p), 0.0, 1.0);
}

void check_args(const ContactPair& pair, int first_slot, int count) {
  pair.validate();
  if (first_slot < 1) {
    throw std::domain_error("contact range must start at slot >= 1, got " +
                            std::to_string(first_slot));
  }
  if (count < 0) {
    throw std::domain_error("contact count must be >= 0, got " +
                            std::to_string(count));
  }
}

double range_mean(const ContactPair& pair, int first_slot, int last_slot) {
  return pair.rate * static_cast<double>(last_slot - first_slot + 1) *
         pair.slot_duration;
}

}  // namespace

void ContactPair::validate() const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::domain_error("contact rate must be finite and >= 0");
  }
  if (!(slot_duration > 0.0) || !std::isfinite(slot_duration)) {
    throw std::domain_error("slot duration must be finite and > 0");
  }
}

double prob_exactly(const ContactPair& pair, int first_slot, int last_slot,
                    int count) {
  check_args(pair, first_slot, count);
  if (last_slot < first_slot) {
    return count == 0 ? 1.0 : 0.0;
  }
  return poisson_pmf(range_mean(pair, first_slot, last_slot), count);
}

double prob_at_least(const ContactPair& pair, int first_slot, int last_slot,
                     int count) {
  check_args(pair, first_slot, count);
  if (count == 0) {
    return 1.0;
  }
  if (last_slot < first_slot) {
    return 0.0;
  }
  const double mean = range_mean(pair, first_slot, last_slot);
  if (mean == 0.0) {
    return 0.0;
  }
  if (count == 1) {
    return std::clamp(-std::expm1(-mean), 0.0, 1.0);
  }
  double below = 0.0;
  for (int i = 0; i < count; ++i) {
    below += poisson_pmf(mean, i);
  }
  return std::clamp(1.0 - below, 0.0, 1.0);
}

}  // namespace d2dto
