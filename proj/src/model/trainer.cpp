#include "clmrc/model/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "clmrc/errors.hpp"
#include "clmrc/log.hpp"

namespace clmrc::model {

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (max_answer_len == 0) throw ConfigError("max_answer_len must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},   {"batch_size", c.batch_size},         {"lr", c.lr},
            {"weight_decay", c.weight_decay}, {"beta1", c.beta1},       {"beta2", c.beta2},
            {"epsilon", c.epsilon}, {"seed", c.seed},                     {"max_answer_len", c.max_answer_len},
            {"eval_each_epoch", c.eval_each_epoch}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc, TrainConfig c) {
    c.epochs = doc.value("epochs", c.epochs);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.lr = doc.value("lr", c.lr);
    c.weight_decay = doc.value("weight_decay", c.weight_decay);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.seed = doc.value("seed", c.seed);
    c.max_answer_len = doc.value("max_answer_len", c.max_answer_len);
    c.eval_each_epoch = doc.value("eval_each_epoch", c.eval_each_epoch);
    c.validate();
    return c;
}

nlohmann::json to_json(const MetricRecord& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"step", r.step},
            {"epoch", r.epoch},
            {"lr", r.lr},
            {"target_loss", r.target_loss},
            {"aux_loss", opt(r.aux_loss)},
            {"lambda_mean", opt(r.lambda_mean)},
            {"dev_em", opt(r.dev_em)},
            {"dev_f1", opt(r.dev_f1)}};
}

void write_metric_log(const std::filesystem::path& path, const std::vector<MetricRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write metric log " + path.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<MetricRecord> train_loop(const num::ParameterList& params, std::size_t example_count,
                                     const TrainConfig& config, const ExampleLossFn& loss_fn,
                                     const DevEvalFn& dev_eval) {
    config.validate();
    if (example_count == 0) throw DataError("training set is empty");
    const std::size_t batch = std::min(config.batch_size, example_count);
    const std::size_t steps_per_epoch = (example_count + batch - 1) / batch;

    num::AdamWConfig opt;
    opt.base_lr = config.lr;
    opt.weight_decay = config.weight_decay;
    opt.beta1 = config.beta1;
    opt.beta2 = config.beta2;
    opt.epsilon = config.epsilon;
    opt.total_steps = steps_per_epoch * config.epochs;
    num::AdamW optimizer(params, opt);

    std::vector<MetricRecord> log;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::uint64_t epoch_seed = num::Rng::derive(config.seed, 0xE0C0 + epoch);
        std::vector<std::size_t> order(example_count);
        std::iota(order.begin(), order.end(), 0);
        num::Rng shuffle(epoch_seed);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

        MetricRecord rec;
        rec.epoch = epoch + 1;
        double target_sum = 0.0, aux_sum = 0.0, lambda_sum = 0.0;
        std::size_t aux_count = 0, lambda_count = 0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const std::size_t begin = s * batch;
            const std::size_t end = std::min(begin + batch, example_count);
            const double weight = 1.0 / static_cast<double>(end - begin);
            num::Gradients grads = num::zero_gradients(params);
            for (std::size_t k = begin; k < end; ++k) {
                num::Tape tape;
                num::Rng dropout(num::Rng::derive(epoch_seed, k));
                const ExampleStats stats = loss_fn(tape, order[k], dropout);
                if (!std::isfinite(stats.loss.scalar()))
                    throw DivergenceError("step " + std::to_string(step) + ": non-finite loss on training example " +
                                          std::to_string(order[k]));
                tape.backward(stats.loss);
                num::collect_gradients(tape, params, grads, weight);
                target_sum += stats.target_loss;
                if (stats.aux_loss) {
                    aux_sum += *stats.aux_loss;
                    ++aux_count;
                }
                if (stats.lambda) {
                    lambda_sum += *stats.lambda;
                    ++lambda_count;
                }
            }
            try {
                rec.lr = optimizer.step(params, grads);
            } catch (const DivergenceError& e) {
                throw DivergenceError("step " + std::to_string(step) + ": " + e.what());
            }
            ++step;
        }
        rec.step = step;
        rec.target_loss = target_sum / static_cast<double>(example_count);
        if (aux_count > 0) rec.aux_loss = aux_sum / static_cast<double>(aux_count);
        if (lambda_count > 0) rec.lambda_mean = lambda_sum / static_cast<double>(lambda_count);
        if (dev_eval && (config.eval_each_epoch || epoch + 1 == config.epochs)) {
            const eval::EvalResult r = dev_eval();
            rec.dev_em = r.em;
            rec.dev_f1 = r.f1;
        }
        spdlog::info("epoch {} step {} lr {:.3g} loss {:.4f}{}", rec.epoch, rec.step, rec.lr, rec.target_loss,
                     rec.dev_em ? fmt::format(" dev em {:.2f} f1 {:.2f}", *rec.dev_em, *rec.dev_f1) : "");
        log.push_back(rec);
    }
    return log;
}

data::Predictions predict_single(const SingleEncoderModel& model, const std::vector<PreparedExample>& examples,
                                 std::size_t max_answer_len) {
    data::Predictions out;
    for (const auto& ex : examples) out[ex.id] = predict_span(model, ex, max_answer_len).text;
    return out;
}

data::Predictions predict_dual(const DualParams& params, const DualConfig& config,
                               const std::vector<PreparedDual>& examples, std::size_t max_answer_len) {
    data::Predictions out;
    for (const auto& ex : examples) out[ex.id] = dual_predict(params, ex, config, max_answer_len).text;
    return out;
}

std::vector<MetricRecord> train_single(SingleEncoderModel& model, const std::vector<PreparedExample>& train,
                                       const TrainConfig& config, const DevSet<PreparedExample>* dev) {
    std::vector<const PreparedExample*> usable;
    for (const auto& ex : train) {
        if (ex.gold)
            usable.push_back(&ex);
        else
            spdlog::warn("skipping '{}': gold span not resolvable after packing", ex.id);
    }
    const num::ParameterList params = model.parameters();
    ExampleLossFn loss = [&](num::Tape& tape, std::size_t i, num::Rng& rng) {
        ExampleStats s;
        s.loss = single_example_loss(tape, model, *usable[i], true, &rng);
        s.target_loss = s.loss.scalar();
        return s;
    };
    DevEvalFn eval_fn;
    if (dev != nullptr)
        eval_fn = [&] {
            return eval::evaluate_dataset(predict_single(model, dev->prepared, config.max_answer_len), dev->references);
        };
    return train_loop(params, usable.size(), config, loss, eval_fn);
}

std::vector<MetricRecord> train_dual(DualParams& params, const DualConfig& dual_config,
                                     const std::vector<PreparedDual>& train, const TrainConfig& config,
                                     const DevSet<PreparedDual>* dev) {
    const num::ParameterList list = params.parameters();
    ExampleLossFn loss = [&](num::Tape& tape, std::size_t i, num::Rng& rng) {
        const DualOutput out = dual_forward_loss(tape, train[i], params, dual_config, true, &rng);
        ExampleStats s;
        s.loss = out.total;
        s.target_loss = out.target_loss.scalar();
        if (out.aux_loss) s.aux_loss = out.aux_loss->scalar();
        s.lambda = out.lambda;
        return s;
    };
    DevEvalFn eval_fn;
    if (dev != nullptr)
        eval_fn = [&] {
            return eval::evaluate_dataset(predict_dual(params, dual_config, dev->prepared, config.max_answer_len),
                                          dev->references);
        };
    return train_loop(list, train.size(), config, loss, eval_fn);
}

}  // namespace clmrc::model
