#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tukey {

// One response: value is present iff observed.
struct DataRecord {
  std::optional<double> value;
  bool observed = true;
};

// When n_missing_known is false the missing records themselves are absent
// (truncated-like regime: even the count of missing values is unknown).
// When true, missing records appear as value-less entries (censored-like
// regime: the count is known).
struct Dataset {
  std::vector<DataRecord> records;
  bool n_missing_known = true;

  std::size_t n_observed() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.observed ? 1 : 0;
    return n;
  }

  std::size_t n_missing() const { return records.size() - n_observed(); }

  std::vector<double> observed_values() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
      if (r.observed) out.push_back(*r.value);
    }
    return out;
  }
};

}  // namespace tukey
