#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace glmphase::cli {

inline const std::vector<std::string> kTasks = {"potential", "se",     "gamp",
                                                "phase-diagram", "errors", "validate"};

struct TaskOutcome {
  ResultTable table;
  bool validation_failed = false;
};

/// Reads every key the task needs before computing anything, so configuration
/// problems surface as ConfigError up front. Rows are computed by `workers`
/// threads and emitted in grid order.
TaskOutcome run_task(const std::string& task, const Config& cfg, int workers);

}  // namespace glmphase::cli
