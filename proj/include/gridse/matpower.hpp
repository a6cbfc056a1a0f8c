#pragma once

#include <string>
#include <string_view>

#include "gridse/network.hpp"

namespace gridse {

/// Parse the MATPOWER case subset (baseMVA + bus/gen/branch tables).
/// Loads and shunts are converted to per-unit; isolated (type 4) buses and
/// any branches touching them are dropped.
Network parse_matpower_case(std::string_view text);

/// Read a case from disk.
Network load_matpower_case(const std::string& path);

/// Canonical re-emission of a parsed network as a MATPOWER case string.
/// parse(write(net)) reproduces net field-for-field.
std::string write_matpower_case(const Network& net);

bool networks_equal(const Network& a, const Network& b);

}  // namespace gridse
