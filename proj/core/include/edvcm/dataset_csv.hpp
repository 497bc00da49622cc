#pragma once

#include <string>

#include "edvcm/data.hpp"

namespace edvcm {

// Long-format dataset file: one row per unit with columns
//   unit_id, stratum_id, d, t, l, A, Y, P, cov_1..cov_k
// t = 0 or l = 0 marks the index as undefined for that unit; exactly one of
// the two must be positive.  A is 1 for event-period units (exposure-day and
// lag-day rows) and 0 for matched control units.
AnalyticDataset read_dataset_csv(const std::string& path);
AnalyticDataset parse_dataset_csv(const std::string& text, const std::string& origin);

void write_dataset_csv(const AnalyticDataset& data, const std::string& path,
                       const std::string& config_text);
std::string dataset_csv_string(const AnalyticDataset& data, const std::string& config_text);

}  // namespace edvcm
