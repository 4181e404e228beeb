#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

#include "clmrc/data/example.hpp"
#include "clmrc/eval/metrics.hpp"
#include "clmrc/model/dual.hpp"
#include "clmrc/model/span.hpp"
#include "clmrc/num/optim.hpp"

namespace clmrc::model {

struct TrainConfig {
    std::size_t epochs = 2;
    std::size_t batch_size = 64;
    double lr = 4e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-6;
    std::uint64_t seed = 13;
    std::size_t max_answer_len = 30;
    /// Score the dev set after every epoch (otherwise only after the last).
    bool eval_each_epoch = true;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig defaults = {});

/// One line of the metric log, written once per epoch. Losses are epoch means.
struct MetricRecord {
    std::size_t step = 0;  // optimizer steps taken so far
    std::size_t epoch = 0;
    double lr = 0.0;       // rate used by the last step of the epoch
    double target_loss = 0.0;
    std::optional<double> aux_loss;
    std::optional<double> lambda_mean;
    std::optional<double> dev_em;
    std::optional<double> dev_f1;
};

nlohmann::json to_json(const MetricRecord& record);
void write_metric_log(const std::filesystem::path& path, const std::vector<MetricRecord>& records);

struct ExampleStats {
    num::Var loss;
    double target_loss = 0.0;
    std::optional<double> aux_loss;
    std::optional<double> lambda;
};

/// Builds the loss of training example `index` on a fresh tape.
using ExampleLossFn = std::function<ExampleStats(num::Tape&, std::size_t index, num::Rng& dropout_rng)>;
using DevEvalFn = std::function<eval::EvalResult()>;

/// Mini-batch AdamW over a cosine schedule. Each epoch visits the examples
/// in a seed-derived shuffled order; every example runs on its own tape and
/// contributes its gradient with weight 1/batch in visiting order, so runs
/// are bit-reproducible per seed. Throws DivergenceError with the step
/// index on a non-finite loss or gradient.
std::vector<MetricRecord> train_loop(const num::ParameterList& params, std::size_t example_count,
                                     const TrainConfig& config, const ExampleLossFn& loss_fn,
                                     const DevEvalFn& dev_eval = nullptr);

data::Predictions predict_single(const SingleEncoderModel& model, const std::vector<PreparedExample>& examples,
                                 std::size_t max_answer_len);
data::Predictions predict_dual(const DualParams& params, const DualConfig& config,
                               const std::vector<PreparedDual>& examples, std::size_t max_answer_len);

/// Dev split for the helpers below: the prepared inputs plus the examples
/// holding the reference answers.
template <typename Prepared>
struct DevSet {
    std::vector<Prepared> prepared;
    std::vector<data::MRCExample> references;
};

/// Trains on the examples that have a resolvable gold span (others are
/// skipped with a warning).
std::vector<MetricRecord> train_single(SingleEncoderModel& model, const std::vector<PreparedExample>& train,
                                       const TrainConfig& config, const DevSet<PreparedExample>* dev = nullptr);
std::vector<MetricRecord> train_dual(DualParams& params, const DualConfig& dual_config,
                                     const std::vector<PreparedDual>& train, const TrainConfig& config,
                                     const DevSet<PreparedDual>* dev = nullptr);

}  // namespace clmrc::model
