#pragma once

#include "robohead/analysis.hpp"
#include "robohead/dataset.hpp"
#include "robohead/default_head.hpp"
#include "robohead/features.hpp"
#include "robohead/head_sim.hpp"
#include "robohead/learn/grid_search.hpp"
#include "robohead/learn/linear.hpp"
#include "robohead/learn/metrics.hpp"
#include "robohead/learn/mlp.hpp"
#include "robohead/learn/pca.hpp"
#include "robohead/retarget.hpp"
#include "robohead/types.hpp"

namespace robohead {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace robohead
