#pragma once

#include <string>

#include "viab/superhedge.hpp"
#include "viab/viability.hpp"

namespace viab {

// Canonical JSON emitters: sorted keys, rationals as reduced "p/q" strings
// in exact mode and 17-significant-digit decimals in float mode, so that
// identical invocations produce byte-identical output.

std::string verdict_to_json(const TreeModel& model, const Verdict& v);
std::string price_report_to_json(const TreeModel& model, const PriceReport& r);
std::string ps_report_to_json(const PsReport& r);
std::string sweep_to_json(const SweepReport& r, const Rat& x,
                          const std::string& cone_desc);
std::string sweep_to_csv(const SweepReport& r);
std::string sensitivity_to_csv(const std::vector<std::pair<Rat, Rat>>& curve);
std::string gap_search_to_json(const GapSearchResult& r);

}  // namespace viab
