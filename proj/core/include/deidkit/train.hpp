#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "deidkit/encoding.hpp"
#include "deidkit/model.hpp"

// Deterministic fine-tuning. The optimizer is plain SGD with decoupled
// weight decay: theta <- theta - lr * (grad + decay * theta), decay skipped
// for biases and LayerNorm parameters. Constant learning rate, no schedule,
// no clipping. A moment-based adaptive optimizer is available behind a flag
// and off by default, so every acceptance-grade run exercises one fully
// specified update rule.

namespace deidkit {

struct HyperParams {
    int batch_size = 0;
    int num_epochs = 0;
    double learning_rate = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    bool adaptive_optimizer = false;

    void validate() const;  // throws ConfigError
};

struct SweepGrid {
    std::vector<int> epochs;
    std::vector<double> learning_rates;
    std::vector<double> weight_decays;
    int batch_size = 0;

    // The published base grid: epochs {10,20,30,40,50}, learning rate
    // {1e-4, 1e-5}, weight decay {0, 0.01, 0.025}, batch 35.
    static SweepGrid defaults();
    // The extended grid used for the largest model: epochs up to 100, a
    // third learning rate 1e-6, decays up to 0.10, batch 12.
    static SweepGrid extended_defaults();

    void validate() const;  // throws ConfigError on an empty dimension
};

struct GridPoint {
    std::size_t index = 0;  // position in the flattened grid
    HyperParams hp;
};

// Cartesian product in a fixed order (epochs outermost, decay innermost).
// Per-point seeds are derived from root_seed by grid index, so the same
// point gets the same seed no matter how the sweep is scheduled.
std::vector<GridPoint> grid_points(const SweepGrid& grid, std::uint64_t root_seed);

struct ValidationMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

struct RunRecord {
    std::size_t grid_index = 0;
    HyperParams hp;
    std::vector<double> epoch_losses;
    ValidationMetrics validation;
    double wall_seconds = 0.0;
    std::uint64_t windows_processed = 0;
    std::uint64_t optimizer_steps = 0;
    double samples_per_second = 0.0;
    double steps_per_second = 0.0;
    std::string checkpoint_path;
    bool failed = false;
};

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& text);

// Trains in place. Batch order reshuffles every epoch from the hp seed;
// identical (model, data, hp) produce bitwise-identical parameters. A
// non-finite loss aborts the run and marks the record failed. Validation
// metrics are left zero for the caller to fill.
RunRecord train(TaggerModel<float>& model, const std::vector<SubwordEncoding>& train_set,
                const HyperParams& hp);

// Throughput from recorded counts. Throws RunError when elapsed <= 0.
struct Throughput {
    double samples_per_second = 0.0;
    double steps_per_second = 0.0;
};
Throughput measure_throughput(std::uint64_t windows, std::uint64_t steps, double seconds);
Throughput measure_throughput(const RunRecord& record);

// Index of the best non-failed record: highest validation F1, ties broken by
// higher accuracy, then fewer epochs, then lower learning rate. Throws
// RunError when every record failed or the list is empty.
std::size_t select_best(const std::vector<RunRecord>& records);

// Runs one grid point; must be safe to call from worker threads when
// sweep jobs > 1.
using SweepRunner = std::function<RunRecord(const GridPoint&)>;

struct SweepResult {
    std::vector<RunRecord> records;  // grid order
    std::size_t best_index = 0;
};

// Executes every grid point not already present in the ledger file, appending
// one JSON line per completed run. Re-running a finished sweep therefore
// trains nothing. jobs bounds the worker pool; order of execution never
// affects results because each point's seed is fixed up front.
SweepResult sweep(const std::vector<GridPoint>& points, const SweepRunner& runner,
                  const std::filesystem::path& ledger_path, int jobs = 1);

}  // namespace deidkit
