#pragma once

#include <string>
#include <vector>

#include "causalstab/bench.hpp"

namespace cstab {

// Two-panel line chart (mean TPR and mean FDR against the nominal level)
// rendered from a results table. The FDR panel carries the dashed diagonal
// marking perfect nominal control. Pure function of the table contents, so
// regenerating from the results CSV reproduces the file byte for byte.
std::string render_results_svg(const std::vector<ResultRow>& table);

}  // namespace cstab
