#pragma once
// Built-in experiment configurations: the 2D fast-diffusion aggregation
// runs on the unit disk (with and without cross diffusion), the 3D
// counterpart on the unit ball, the 1D decay study, and the 1D
// manufactured-solution convergence case.

#include <optional>
#include <string>
#include <vector>

#include "ksfv/config.hpp"
#include "ksfv/mms.hpp"

namespace ksfv {

std::vector<std::string> preset_names();
std::optional<ParsedConfig> preset(const std::string& name);

std::vector<std::string> mms_preset_names();
std::optional<MmsCase> mms_preset(const std::string& name);

}  // namespace ksfv
