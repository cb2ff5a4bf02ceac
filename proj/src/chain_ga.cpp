#include "miml/chain_ga.hpp"

#include "miml/errors.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace miml {

bool Chain::contains(std::size_t label) const {
    return std::find(order.begin(), order.end(), label) != order.end();
}

bool Chain::is_valid(std::size_t n_labels) const {
    if (order.size() > n_labels) return false;
    std::vector<bool> seen(n_labels, false);
    for (auto l : order) {
        if (l >= n_labels || seen[l]) return false;
        seen[l] = true;
    }
    return true;
}

void Chain::validate(std::size_t n_labels) const {
    if (!is_valid(n_labels)) {
        throw ConfigError("invalid chain " + to_string() + " for " + std::to_string(n_labels) + " labels");
    }
}

std::string Chain::to_string() const {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < order.size(); ++i) out << (i ? "," : "") << order[i];
    out << ']';
    return out.str();
}

Chain full_chain(std::size_t n_labels) {
    Chain c;
    c.order.resize(n_labels);
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    return c;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> signed_labels(const EmbeddedDataset& ds, std::size_t label) {
    std::vector<int> y(ds.n_bag());
    for (std::size_t i = 0; i < ds.n_bag(); ++i) y[i] = ds.labels[i][label] ? 1 : -1;
    return y;
}

/// `base` with the given probability columns appended in order.
Matrix append_columns(const Matrix& base, std::span<const std::vector<double>* const> columns) {
    Matrix out(base.rows(), base.cols() + columns.size());
    for (std::size_t i = 0; i < base.rows(); ++i) {
        auto row = out.row(i);
        std::copy(base.row(i).begin(), base.row(i).end(), row.begin());
        for (std::size_t c = 0; c < columns.size(); ++c) row[base.cols() + c] = (*columns[c])[i];
    }
    return out;
}

/// Runs the models in sequence, each seeing the rows extended by its predecessors' outputs.
Matrix augment_through(const Matrix& rows, std::span<const SvmModel* const> models) {
    Matrix out(rows.rows(), rows.cols() + models.size());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        std::vector<double> x(rows.row(i).begin(), rows.row(i).end());
        for (const auto* m : models) x.push_back(predict_proba(*m, x));
        std::copy(x.begin(), x.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> probabilities(const SvmModel& model, const Matrix& rows) {
    std::vector<double> p(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) p[i] = predict_proba(model, rows.row(i));
    return p;
}

void check_extra(const ExtraNegatives& extra, std::size_t n_labels, std::size_t width) {
    if (extra.empty()) return;
    if (extra.size() != n_labels) throw DataError("extra negatives: expected one matrix per label");
    for (const auto& m : extra) {
        if (!m.empty() && m.cols() != width) throw DataError("extra negatives: width mismatch");
    }
}

}  // namespace

ChainTrainer::ChainTrainer(EmbeddedDataset train, SvmConfig svm, ExtraNegatives extra,
                           std::optional<Matrix> eval_rows)
    : train_(std::move(train)), svm_(svm), extra_(std::move(extra)), eval_(std::move(eval_rows)) {
    if (train_.n_bag() == 0) throw DataError("chain training set is empty");
    svm_.validate();
    check_extra(extra_, train_.n_labels(), train_.z.cols());
    if (eval_ && !eval_->empty() && eval_->cols() != train_.z.cols()) {
        throw DataError("evaluation rows have the wrong width");
    }
}

std::size_t ChainTrainer::models_trained() const {
    std::lock_guard lock(mutex_);
    return memo_.size();
}

std::shared_ptr<const ChainTrainer::Node> ChainTrainer::node(std::span<const std::size_t> prefix) {
    std::vector<std::size_t> key(prefix.begin(), prefix.end());
    {
        std::lock_guard lock(mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }

    const std::size_t label = prefix.back();
    std::vector<std::shared_ptr<const Node>> preds;
    for (std::size_t p = 0; p + 1 < prefix.size(); ++p) preds.push_back(node(prefix.first(p + 1)));

    std::vector<const std::vector<double>*> train_cols;
    std::vector<const SvmModel*> pred_models;
    for (const auto& p : preds) {
        train_cols.push_back(&p->train_probs);
        pred_models.push_back(&p->model);
    }
    Matrix x = append_columns(train_.z, train_cols);
    const std::size_t n_real = x.rows();
    std::vector<int> y = signed_labels(train_, label);
    if (!extra_.empty() && !extra_[label].empty()) {
        const Matrix ext = augment_through(extra_[label], pred_models);
        for (std::size_t i = 0; i < ext.rows(); ++i) {
            x.push_row(ext.row(i));
            y.push_back(-1);
        }
    }

    auto fresh = std::make_shared<Node>();
    fresh->model = calibrate(svm_train(x, y, svm_), x, y);
    fresh->train_probs.resize(n_real);
    for (std::size_t i = 0; i < n_real; ++i) fresh->train_probs[i] = predict_proba(fresh->model, x.row(i));
    if (eval_) {
        std::vector<const std::vector<double>*> eval_cols;
        for (const auto& p : preds) eval_cols.push_back(&p->eval_probs);
        fresh->eval_probs = probabilities(fresh->model, append_columns(*eval_, eval_cols));
    }

    std::lock_guard lock(mutex_);
    auto [it, inserted] = memo_.emplace(std::move(key), std::move(fresh));
    return it->second;
}

ChainModel ChainTrainer::train(const Chain& chain) {
    const std::size_t n_labels = train_.n_labels();
    chain.validate(n_labels);
    ChainModel model;
    model.chain = chain;
    model.n_labels = n_labels;
    model.width = train_.z.cols();
    const std::span<const std::size_t> order(chain.order);
    for (std::size_t j = 0; j < order.size(); ++j) model.chained_svms.push_back(node(order.first(j + 1))->model);
    for (std::size_t l = 0; l < n_labels; ++l) {
        if (chain.contains(l)) continue;
        const std::size_t single[] = {l};
        model.independent_labels.push_back(l);
        model.independent_svms.push_back(node(single)->model);
    }
    return model;
}

Matrix ChainTrainer::eval_scores(const Chain& chain) {
    if (!eval_) throw RuntimeFailure("ChainTrainer has no evaluation rows");
    const std::size_t n_labels = train_.n_labels();
    chain.validate(n_labels);
    Matrix scores(eval_->rows(), n_labels);
    const std::span<const std::size_t> order(chain.order);
    auto fill = [&](std::size_t label, const Node& n) {
        for (std::size_t i = 0; i < scores.rows(); ++i) scores(i, label) = n.eval_probs[i];
    };
    for (std::size_t j = 0; j < order.size(); ++j) fill(order[j], *node(order.first(j + 1)));
    for (std::size_t l = 0; l < n_labels; ++l) {
        if (chain.contains(l)) continue;
        const std::size_t single[] = {l};
        fill(l, *node(single));
    }
    return scores;
}

ChainModel train_chain(const EmbeddedDataset& train, const Chain& chain, const SvmConfig& svm,
                       const ExtraNegatives& extra) {
    ChainTrainer trainer(train, svm, extra);
    return trainer.train(chain);
}

Matrix predict_scores(const ChainModel& model, const Matrix& z_rows) {
    if (!z_rows.empty() && z_rows.cols() != model.width) {
        throw DataError("predict_scores: expected width " + std::to_string(model.width) + ", got " +
                        std::to_string(z_rows.cols()));
    }
    Matrix scores(z_rows.rows(), model.n_labels);
    for (std::size_t i = 0; i < z_rows.rows(); ++i) {
        const auto row = z_rows.row(i);
        std::vector<double> x(row.begin(), row.end());
        for (std::size_t j = 0; j < model.chained_svms.size(); ++j) {
            const double p = predict_proba(model.chained_svms[j], x);
            scores(i, model.chain.order[j]) = p;
            x.push_back(p);
        }
        for (std::size_t m = 0; m < model.independent_svms.size(); ++m) {
            scores(i, model.independent_labels[m]) = predict_proba(model.independent_svms[m], row);
        }
    }
    return scores;
}

// ---------------------------------------------------------------------------

void BinarizationCriterion::validate() const {
    if (kind == Kind::C && !(c_threshold >= 0.0 && c_threshold <= 0.5)) {
        throw ConfigError("criterion.c_threshold must lie in [0, 0.5]");
    }
}

BinarizationCriterion::Kind parse_criterion_kind(std::string_view name) {
    if (name == "T" || name == "t") return BinarizationCriterion::Kind::T;
    if (name == "C" || name == "c") return BinarizationCriterion::Kind::C;
    throw ConfigError("criterion.kind must be T or C, got '" + std::string(name) + "'");
}

LabelVector binarize(std::span<const double> scores, const BinarizationCriterion& criterion) {
    criterion.validate();
    if (scores.empty()) throw DataError("binarize: empty score vector");
    const double threshold = criterion.threshold();
    LabelVector out(scores.size(), 0);
    bool any = false;
    for (std::size_t l = 0; l < scores.size(); ++l) {
        if (scores[l] > threshold) {
            out[l] = 1;
            any = true;
        }
    }
    if (!any) out[static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin())] = 1;
    return out;
}

LabelMatrix binarize(const Matrix& scores, const BinarizationCriterion& criterion) {
    LabelMatrix out;
    out.reserve(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) out.push_back(binarize(scores.row(i), criterion));
    return out;
}

double fitness(const Chain& chain, const EmbeddedDataset& train, const EmbeddedDataset& validation,
               const BinarizationCriterion& criterion, const SvmConfig& svm, const ExtraNegatives& extra) {
    if (validation.n_bag() == 0) throw DataError("fitness: empty validation set");
    const auto model = train_chain(train, chain, svm, extra);
    return accuracy_jaccard(validation.labels, binarize(predict_scores(model, validation.z), criterion));
}

// ---------------------------------------------------------------------------

void GaConfig::validate() const {
    if (population_size < 3) throw ConfigError("ga.population must be at least 3");
    if (tournament_size < 1 || tournament_size > population_size) {
        throw ConfigError("ga.tournament must lie in [1, ga.population]");
    }
    if (generations < 1) throw ConfigError("ga.generations must be at least 1");
    if (max_mutation_length_change < 1) throw ConfigError("ga.mutation_len must be at least 1");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) || !(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw ConfigError("ga crossover/mutation rates must lie in [0, 1]");
    }
}

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

Chain crossover(const Chain& a, const Chain& b, std::mt19937_64& rng) {
    const std::size_t cut = uniform(rng, 0, a.size());
    Chain child;
    child.order.assign(a.order.begin(), a.order.begin() + static_cast<std::ptrdiff_t>(cut));
    for (auto l : b.order) {
        if (!child.contains(l)) child.order.push_back(l);
    }
    const std::size_t lo = std::min(a.size(), b.size());
    const std::size_t hi = std::max(a.size(), b.size());
    const std::size_t target = uniform(rng, lo, hi);
    if (child.order.size() > target) child.order.resize(target);
    return child;
}

Chain crossover(const Chain& a, const Chain& b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return crossover(a, b, rng);
}

Chain mutate(const Chain& c, std::size_t n_labels, const GaConfig& config, std::mt19937_64& rng) {
    enum class Op { insert, erase, swap };
    Chain out = c;
    const std::size_t steps = uniform(rng, 1, config.max_mutation_length_change);
    for (std::size_t s = 0; s < steps; ++s) {
        std::vector<Op> ops;
        if (out.size() < n_labels) ops.push_back(Op::insert);
        if (!out.order.empty()) ops.push_back(Op::erase);
        if (out.size() >= 2) ops.push_back(Op::swap);
        if (ops.empty()) break;
        switch (ops[uniform(rng, 0, ops.size() - 1)]) {
            case Op::insert: {
                std::vector<std::size_t> absent;
                for (std::size_t l = 0; l < n_labels; ++l) {
                    if (!out.contains(l)) absent.push_back(l);
                }
                const auto label = absent[uniform(rng, 0, absent.size() - 1)];
                const auto pos = uniform(rng, 0, out.size());
                out.order.insert(out.order.begin() + static_cast<std::ptrdiff_t>(pos), label);
                break;
            }
            case Op::erase:
                out.order.erase(out.order.begin() + static_cast<std::ptrdiff_t>(uniform(rng, 0, out.size() - 1)));
                break;
            case Op::swap: {
                const auto i = uniform(rng, 0, out.size() - 1);
                auto j = uniform(rng, 0, out.size() - 2);
                if (j >= i) ++j;
                std::swap(out.order[i], out.order[j]);
                break;
            }
        }
    }
    return out;
}

Chain mutate(const Chain& c, std::size_t n_labels, const GaConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return mutate(c, n_labels, config, rng);
}

std::vector<Chain> initial_population(std::size_t n_labels, std::size_t size, std::mt19937_64& rng) {
    std::vector<Chain> pop;
    pop.push_back(Chain{});
    if (size > 1) pop.push_back(full_chain(n_labels));
    while (pop.size() < size) {
        Chain c = full_chain(n_labels);
        std::shuffle(c.order.begin(), c.order.end(), rng);
        c.order.resize(uniform(rng, 0, n_labels));
        pop.push_back(std::move(c));
    }
    return pop;
}

GaResult ga_search(const EmbeddedDataset& train, const EmbeddedDataset& validation, const GaConfig& config,
                   const BinarizationCriterion& criterion, const SvmConfig& svm, const ExtraNegatives& extra,
                   std::vector<Chain> seed_population) {
    config.validate();
    criterion.validate();
    if (validation.n_bag() == 0) throw DataError("ga_search: empty validation set");
    const std::size_t n_labels = train.n_labels();

    std::mt19937_64 rng(config.seed);
    ChainTrainer trainer(train, svm, extra, validation.z);
    std::map<Chain, double> scored;

    auto evaluate = [&](const std::vector<Chain>& pop) {
        std::vector<Chain> todo;
        for (const auto& c : pop) {
            c.validate(n_labels);
            if (!scored.contains(c) && std::find(todo.begin(), todo.end(), c) == todo.end()) todo.push_back(c);
        }
        std::vector<double> values(todo.size());
        parallel_for(todo.size(), [&](std::size_t i) {
            values[i] = accuracy_jaccard(validation.labels, binarize(trainer.eval_scores(todo[i]), criterion));
        });
        for (std::size_t i = 0; i < todo.size(); ++i) scored.emplace(todo[i], values[i]);
    };
    auto best_of = [&](const std::vector<Chain>& pop) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (scored.at(pop[i]) > scored.at(pop[best])) best = i;
        }
        return best;
    };
    auto tournament = [&](const std::vector<Chain>& pop) -> const Chain& {
        std::size_t winner = uniform(rng, 0, pop.size() - 1);
        for (std::size_t t = 1; t < config.tournament_size; ++t) {
            const std::size_t challenger = uniform(rng, 0, pop.size() - 1);
            const double cf = scored.at(pop[challenger]);
            const double wf = scored.at(pop[winner]);
            if (cf > wf || (cf == wf && challenger < winner)) winner = challenger;
        }
        return pop[winner];
    };

    std::vector<Chain> population = seed_population.empty()
                                        ? initial_population(n_labels, config.population_size, rng)
                                        : std::move(seed_population);
    evaluate(population);

    GaResult result;
    result.best = population[best_of(population)];
    result.best_fitness = scored.at(result.best);
    result.history.push_back(result.best_fitness);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t stagnant = 0;
    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        std::vector<Chain> next{population[best_of(population)]};
        while (next.size() < population.size()) {
            const Chain& p1 = tournament(population);
            const Chain& p2 = tournament(population);
            Chain child = unit(rng) < config.crossover_rate ? crossover(p1, p2, rng) : p1;
            if (unit(rng) < config.mutation_rate) child = mutate(child, n_labels, config, rng);
            next.push_back(std::move(child));
        }
        population = std::move(next);
        evaluate(population);

        const Chain& gen_best = population[best_of(population)];
        if (scored.at(gen_best) > result.best_fitness) {
            result.best = gen_best;
            result.best_fitness = scored.at(gen_best);
            stagnant = 0;
        } else {
            ++stagnant;
        }
        result.history.push_back(result.best_fitness);
        if (config.stagnation_limit > 0 && stagnant >= config.stagnation_limit) break;
    }
    result.evaluations = scored.size();
    return result;
}

}  // namespace miml
