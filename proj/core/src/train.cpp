#include "deidkit/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "deidkit/errors.hpp"

namespace deidkit {

namespace {

// Moment estimates for the optional adaptive optimizer, one flat buffer per
// parameter tensor in parameter_refs order.
struct AdamState {
    std::vector<Vector<float>> m;
    std::vector<Vector<float>> v;
    std::int64_t step = 0;
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void apply_update(TaggerModel<float>& model, TaggerModel<float>& grads,
                  const HyperParams& hp, AdamState* adam) {
    auto params = parameter_refs(model);
    auto gradients = parameter_refs(grads);
    const auto lr = static_cast<float>(hp.learning_rate);
    const auto decay = static_cast<float>(hp.weight_decay);

    if (adam != nullptr) {
        ++adam->step;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam->step));
        const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam->step));
        for (std::size_t i = 0; i < params.size(); ++i) {
            float* p = params[i].matrix != nullptr ? params[i].matrix->data()
                                                   : params[i].vector->data();
            const float* g = gradients[i].matrix != nullptr ? gradients[i].matrix->data()
                                                            : gradients[i].vector->data();
            float* m = adam->m[i].data();
            float* v = adam->v[i].data();
            const Eigen::Index n = params[i].size();
            for (Eigen::Index j = 0; j < n; ++j) {
                m[j] = static_cast<float>(kAdamBeta1 * m[j] + (1.0 - kAdamBeta1) * g[j]);
                v[j] = static_cast<float>(kAdamBeta2 * v[j] +
                                          (1.0 - kAdamBeta2) * static_cast<double>(g[j]) * g[j]);
                const double m_hat = m[j] / bc1;
                const double v_hat = v[j] / bc2;
                double update = m_hat / (std::sqrt(v_hat) + kAdamEps);
                if (params[i].decay) update += static_cast<double>(decay) * p[j];
                p[j] -= static_cast<float>(lr * update);
            }
        }
        return;
    }

    for (std::size_t i = 0; i < params.size(); ++i) {
        float* p = params[i].matrix != nullptr ? params[i].matrix->data()
                                               : params[i].vector->data();
        const float* g = gradients[i].matrix != nullptr ? gradients[i].matrix->data()
                                                        : gradients[i].vector->data();
        const Eigen::Index n = params[i].size();
        if (params[i].decay && decay > 0.0f) {
            for (Eigen::Index j = 0; j < n; ++j) p[j] -= lr * (g[j] + decay * p[j]);
        } else {
            for (Eigen::Index j = 0; j < n; ++j) p[j] -= lr * g[j];
        }
    }
}

nlohmann::json hp_to_json(const HyperParams& hp) {
    return nlohmann::json{
        {"batch_size", hp.batch_size},
        {"num_epochs", hp.num_epochs},
        {"learning_rate", hp.learning_rate},
        {"weight_decay", hp.weight_decay},
        {"seed", hp.seed},
        {"adaptive_optimizer", hp.adaptive_optimizer},
    };
}

HyperParams hp_from_json(const nlohmann::json& j) {
    HyperParams hp;
    hp.batch_size = j.at("batch_size").get<int>();
    hp.num_epochs = j.at("num_epochs").get<int>();
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.weight_decay = j.at("weight_decay").get<double>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.adaptive_optimizer = j.value("adaptive_optimizer", false);
    return hp;
}

}  // namespace

void HyperParams::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (num_epochs < 1) throw ConfigError("num_epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
}

SweepGrid SweepGrid::defaults() {
    SweepGrid grid;
    grid.epochs = {10, 20, 30, 40, 50};
    grid.learning_rates = {1e-4, 1e-5};
    grid.weight_decays = {0.0, 0.01, 0.025};
    grid.batch_size = 35;
    return grid;
}

SweepGrid SweepGrid::extended_defaults() {
    SweepGrid grid;
    grid.epochs = {10, 20, 30, 40, 50, 75, 100};
    grid.learning_rates = {1e-4, 1e-5, 1e-6};
    grid.weight_decays = {0.0, 0.01, 0.025, 0.05, 0.10};
    grid.batch_size = 12;
    return grid;
}

void SweepGrid::validate() const {
    if (epochs.empty() || learning_rates.empty() || weight_decays.empty()) {
        throw ConfigError("sweep grid has an empty dimension");
    }
    if (batch_size < 1) throw ConfigError("sweep grid batch_size must be at least 1");
}

std::vector<GridPoint> grid_points(const SweepGrid& grid, std::uint64_t root_seed) {
    grid.validate();
    std::vector<GridPoint> points;
    points.reserve(grid.epochs.size() * grid.learning_rates.size() *
                   grid.weight_decays.size());
    std::size_t index = 0;
    for (int epochs : grid.epochs) {
        for (double lr : grid.learning_rates) {
            for (double decay : grid.weight_decays) {
                GridPoint point;
                point.index = index;
                point.hp.batch_size = grid.batch_size;
                point.hp.num_epochs = epochs;
                point.hp.learning_rate = lr;
                point.hp.weight_decay = decay;
                point.hp.seed = derive_seed(root_seed, index);
                points.push_back(point);
                ++index;
            }
        }
    }
    return points;
}

std::string run_record_to_json(const RunRecord& record) {
    nlohmann::json j{
        {"grid_index", record.grid_index},
        {"hyperparams", hp_to_json(record.hp)},
        {"epoch_losses", record.epoch_losses},
        {"validation",
         nlohmann::json{{"precision", record.validation.precision},
                        {"recall", record.validation.recall},
                        {"f1", record.validation.f1},
                        {"accuracy", record.validation.accuracy}}},
        {"wall_seconds", record.wall_seconds},
        {"windows_processed", record.windows_processed},
        {"optimizer_steps", record.optimizer_steps},
        {"samples_per_second", record.samples_per_second},
        {"steps_per_second", record.steps_per_second},
        {"checkpoint_path", record.checkpoint_path},
        {"failed", record.failed},
    };
    return j.dump();
}

RunRecord run_record_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad run record: ") + e.what(), 0, 0);
    }
    try {
        RunRecord record;
        record.grid_index = j.at("grid_index").get<std::size_t>();
        record.hp = hp_from_json(j.at("hyperparams"));
        record.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
        const nlohmann::json& val = j.at("validation");
        record.validation.precision = val.at("precision").get<double>();
        record.validation.recall = val.at("recall").get<double>();
        record.validation.f1 = val.at("f1").get<double>();
        record.validation.accuracy = val.at("accuracy").get<double>();
        record.wall_seconds = j.at("wall_seconds").get<double>();
        record.windows_processed = j.at("windows_processed").get<std::uint64_t>();
        record.optimizer_steps = j.at("optimizer_steps").get<std::uint64_t>();
        record.samples_per_second = j.at("samples_per_second").get<double>();
        record.steps_per_second = j.at("steps_per_second").get<double>();
        record.checkpoint_path = j.at("checkpoint_path").get<std::string>();
        record.failed = j.at("failed").get<bool>();
        return record;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad run record: ") + e.what(), 0, 0);
    }
}

RunRecord train(TaggerModel<float>& model, const std::vector<SubwordEncoding>& train_set,
                const HyperParams& hp) {
    hp.validate();
    if (train_set.empty()) throw InputError("training set is empty");

    RunRecord record;
    record.hp = hp;

    Rng rng(hp.seed);
    AdamState adam;
    AdamState* adam_ptr = nullptr;
    if (hp.adaptive_optimizer) {
        auto refs = parameter_refs(model);
        adam.m.reserve(refs.size());
        adam.v.reserve(refs.size());
        for (const ParamRef<float>& ref : refs) {
            adam.m.push_back(Vector<float>::Zero(ref.size()));
            adam.v.push_back(Vector<float>::Zero(ref.size()));
        }
        adam_ptr = &adam;
    }

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < hp.num_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t from = 0; from < order.size();
             from += static_cast<std::size_t>(hp.batch_size)) {
            const std::size_t to =
                std::min(order.size(), from + static_cast<std::size_t>(hp.batch_size));
            std::vector<SubwordEncoding> batch;
            batch.reserve(to - from);
            for (std::size_t i = from; i < to; ++i) batch.push_back(train_set[order[i]]);

            LossResult<float> result = loss_and_grad(model, batch, RunMode::train, &rng);
            record.windows_processed += to - from;
            ++record.optimizer_steps;
            ++batches;
            epoch_loss += result.loss;
            if (!std::isfinite(result.loss)) {
                record.failed = true;
                record.epoch_losses.push_back(result.loss);
                const auto t1 = std::chrono::steady_clock::now();
                record.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
                return record;
            }
            apply_update(model, result.grads, hp, adam_ptr);
        }
        record.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
    const auto t1 = std::chrono::steady_clock::now();
    record.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    if (record.wall_seconds > 0.0) {
        const Throughput tp =
            measure_throughput(record.windows_processed, record.optimizer_steps,
                               record.wall_seconds);
        record.samples_per_second = tp.samples_per_second;
        record.steps_per_second = tp.steps_per_second;
    }
    return record;
}

Throughput measure_throughput(std::uint64_t windows, std::uint64_t steps, double seconds) {
    if (!(seconds > 0.0)) {
        throw RunError("cannot measure throughput over a non-positive time span");
    }
    Throughput tp;
    tp.samples_per_second = static_cast<double>(windows) / seconds;
    tp.steps_per_second = static_cast<double>(steps) / seconds;
    return tp;
}

Throughput measure_throughput(const RunRecord& record) {
    return measure_throughput(record.windows_processed, record.optimizer_steps,
                              record.wall_seconds);
}

std::size_t select_best(const std::vector<RunRecord>& records) {
    std::size_t best = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].failed) continue;
        if (best == records.size()) {
            best = i;
            continue;
        }
        const RunRecord& a = records[i];
        const RunRecord& b = records[best];
        if (a.validation.f1 != b.validation.f1) {
            if (a.validation.f1 > b.validation.f1) best = i;
        } else if (a.validation.accuracy != b.validation.accuracy) {
            if (a.validation.accuracy > b.validation.accuracy) best = i;
        } else if (a.hp.num_epochs != b.hp.num_epochs) {
            if (a.hp.num_epochs < b.hp.num_epochs) best = i;
        } else if (a.hp.learning_rate < b.hp.learning_rate) {
            best = i;
        }
    }
    if (best == records.size()) {
        throw RunError("no successful runs to select from");
    }
    return best;
}

SweepResult sweep(const std::vector<GridPoint>& points, const SweepRunner& runner,
                  const std::filesystem::path& ledger_path, int jobs) {
    if (points.empty()) throw ConfigError("sweep grid is empty");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");

    std::vector<RunRecord> records(points.size());
    std::vector<bool> have(points.size(), false);

    // Resume: grid points already in the ledger are not re-run.
    if (std::filesystem::exists(ledger_path)) {
        std::ifstream in(ledger_path, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            RunRecord record = run_record_from_json(line);
            if (record.grid_index < points.size()) {
                records[record.grid_index] = std::move(record);
                have[record.grid_index] = true;
            }
        }
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!have[i]) pending.push_back(i);
    }

    if (!pending.empty()) {
        std::ofstream ledger(ledger_path, std::ios::binary | std::ios::app);
        if (!ledger) throw InputError("cannot open sweep ledger " + ledger_path.string());
        std::mutex mu;
        std::size_t cursor = 0;
        std::exception_ptr first_error;

        const auto worker = [&] {
            for (;;) {
                std::size_t task;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (first_error != nullptr || cursor >= pending.size()) return;
                    task = pending[cursor++];
                }
                try {
                    RunRecord record = runner(points[task]);
                    record.grid_index = points[task].index;
                    std::lock_guard<std::mutex> lock(mu);
                    ledger << run_record_to_json(record) << '\n';
                    ledger.flush();
                    records[task] = std::move(record);
                    have[task] = true;
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (first_error == nullptr) first_error = std::current_exception();
                    return;
                }
            }
        };

        const int n_workers =
            std::min<int>(jobs, static_cast<int>(pending.size()));
        if (n_workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(static_cast<std::size_t>(n_workers));
            for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
            for (std::thread& t : threads) t.join();
        }
        if (first_error != nullptr) std::rethrow_exception(first_error);
    }

    SweepResult result;
    result.records = std::move(records);
    result.best_index = select_best(result.records);
    return result;
}

}  // namespace deidkit
