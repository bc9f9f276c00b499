#ifndef D2DTO_CONTACT_MODEL_HPP_
#define D2DTO_CONTACT_MODEL_HPP_

namespace d2dto {

// Contact statistics of one requester-helper pair. Contacts form a Poisson
// process with `rate` contacts per unit time, observed over slots of duration
// `slot_duration`, so the number of contacts during slots k..l is Poisson
// with mean rate * (l - k + 1) * slot_duration.
struct ContactPair {
  double rate = 0.0;           // contacts per unit time, >= 0
  double slot_duration = 1.0;  // time units per slot, > 0

  // Throws std::domain_error if the invariants above do not hold.
  void validate() const;
};

// P(exactly `count` contacts during slots first_slot..last_slot).
//
// first_slot >= 1 and count >= 0; last_slot < first_slot denotes the empty
// range, for which zero contacts are certain.
double prob_exactly(const ContactPair& pair, int first_slot, int last_slot,
                    int count);

// P(at least `count` contacts during slots first_slot..last_slot).
double prob_at_least(const ContactPair& pair, int first_slot, int last_slot,
                     int count);

}  // namespace d2dto

#endif  // D2DTO_CONTACT_MODEL_HPP_
