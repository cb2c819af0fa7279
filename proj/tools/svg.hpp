#pragma once

#include <string>

#include "coevo/shape.hpp"

namespace coevo::cli {

// Renders chain_vertices as one polygon per brick, y up, in world units.
// `caption` is emitted as the SVG <title> when non-empty.
std::string chain_svg(const shape::BrickChain& chain, const std::string& caption = {});

}  // namespace coevo::cli
