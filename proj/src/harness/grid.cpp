#include "embedhalluc/harness/grid.hpp"

#include "embedhalluc/errors.hpp"

namespace embedhalluc::harness {

const std::vector<double>& default_lr_grid() {
    static const std::vector<double> grid{1e-5, 5e-6, 1e-6};
    return grid;
}

const std::vector<std::size_t>& default_batch_grid() {
    static const std::vector<std::size_t> grid{4, 6, 8};
    return grid;
}

std::size_t best_cell_index(const std::vector<CellRecord>& cells) {
    if (cells.empty()) throw ConfigError("no grid cells to choose from");
    std::size_t best = 0;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const auto& a = cells[i];
        const auto& b = cells[best];
        const double sa = a.outcome.validation_score;
        const double sb = b.outcome.validation_score;
        if (sa > sb) {
            best = i;
        } else if (sa == sb) {
            if (a.cell.lr < b.cell.lr || (a.cell.lr == b.cell.lr && a.cell.batch < b.cell.batch)) best = i;
        }
    }
    return best;
}

GridResult grid_search(const CellTrainer& train, const std::vector<double>& lrs,
                       const std::vector<std::size_t>& batches) {
    if (lrs.empty() || batches.empty()) throw ConfigError("grid search needs nonempty lr and batch grids");
    GridResult result;
    for (double lr : lrs) {
        for (std::size_t batch : batches) {
            const GridCell cell{lr, batch};
            result.cells.push_back({cell, train(cell)});
        }
    }
    result.best = best_cell_index(result.cells);
    return result;
}

}  // namespace embedhalluc::harness
