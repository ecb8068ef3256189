#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "atekit/core.hpp"
#include "atekit/diagnostics.hpp"

namespace atekit::report {

using Json = nlohmann::ordered_json;

Json config_to_json(const RunConfig& cfg);

/// FNV-1a 64 of the compact config JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

Json point_estimate_to_json(const PointEstimate& pe);

/// Rows carry exactly {method, estimate, se, trimmed, sbb, covsplit_mean,
/// covsplit_std}; failed cells are null and explained under meta.
Json report_to_json(const diagnostics::DiagnosticsReport& rep, const std::vector<std::string>& column_names);

/// "bin_left,bin_right,count" header plus one line per bin.
std::string histogram_csv(const std::vector<diagnostics::HistogramBin>& bins);

/// Self-contained SVG bar chart of the bins.
std::string histogram_svg(const std::vector<diagnostics::HistogramBin>& bins);

}  // namespace atekit::report
