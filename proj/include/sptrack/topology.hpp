#pragma once

#include <string>

#include "sptrack/applications.hpp"
#include "sptrack/keyvalue.hpp"

namespace sptrack {

// Topology files use the key-value grammar of keyvalue.hpp:
//
//   [network]   nodes (required); snr_db, r_min, r_max, admit_tol (optional)
//   [link]      tx, rx (1-based nodes); power (else from snr_db); h_index
//               (0-based entry of h, default: link order). One section per
//               link, numbered 1, 2, ... in file order.
//   [flow]      src, dst, route = comma-separated link numbers in path order
//   [region]    node, mac_sum = true|false   (sum-capacity constraint switch)
//   [partition] vars = comma-separated stacked variable indices; repeated
//               sections define the compensation groups
//
// Defaults for snr_db and the SNR normalization come from the caller.

struct TopologyDefaults {
  double snr_db = 10.0;
  double mean_sq_gain = 2.0;
  double r_min = -0.5;
  double r_max = 1000.0;
  double admit_tol = 0.0;
};

NumInstance parse_topology(const KvDocument& doc, const TopologyDefaults& defaults = {});
NumInstance load_topology(const std::string& path, const TopologyDefaults& defaults = {});

}  // namespace sptrack
