#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace embedhalluc::harness {

struct GridCell {
    double lr = 0.0;
    std::size_t batch = 0;
};

struct CellOutcome {
    double validation_score = 0.0;
    std::size_t selected_step = 0;
};

struct CellRecord {
    GridCell cell;
    CellOutcome outcome;
};

struct GridResult {
    std::size_t best = 0;  // index into cells
    std::vector<CellRecord> cells;

    const CellRecord& best_cell() const { return cells.at(best); }
};

using CellTrainer = std::function<CellOutcome(const GridCell&)>;

// Runs every (lr, batch) cell, lrs outer, and returns the highest validation
// score; ties go to the lower lr, then the smaller batch. Throws ConfigError
// on an empty grid.
GridResult grid_search(const CellTrainer& train, const std::vector<double>& lrs, const std::vector<std::size_t>& batches);

// Index of the winning record under the same rule.
std::size_t best_cell_index(const std::vector<CellRecord>& cells);

const std::vector<double>& default_lr_grid();
const std::vector<std::size_t>& default_batch_grid();

}  // namespace embedhalluc::harness
