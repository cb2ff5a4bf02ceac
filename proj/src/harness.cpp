#include "miml/harness.hpp"

#include "miml/errors.hpp"
#include "miml/imbalance.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace miml {

namespace {
std::atomic<std::size_t> g_leakage_trips{0};
}

std::size_t leakage_guard_trips() { return g_leakage_trips.load(); }

void leakage_guard(bool ok, std::string_view what) {
    if (ok) return;
    ++g_leakage_trips;
    throw RuntimeFailure("leakage guard: " + std::string(what));
}

HoldoutSplit stratified_holdout(const std::vector<LabelVector>& labels, double fraction, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (n < 2) throw DataError("hold-out split needs at least 2 bags");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

    HoldoutSplit split;
    for (std::size_t pos = 0; pos < n; ++pos) {
        const auto before = static_cast<std::size_t>(static_cast<double>(pos) * fraction);
        const auto after = static_cast<std::size_t>(static_cast<double>(pos + 1) * fraction);
        (after > before ? split.validation : split.train).push_back(order[pos]);
    }
    if (split.validation.empty()) {
        split.validation.push_back(split.train.back());
        split.train.pop_back();
    }
    if (split.train.empty()) {
        split.train.push_back(split.validation.back());
        split.validation.pop_back();
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

ExtraNegatives build_extra_negatives(const MimlDataset& train, const MedoidSet& medoids, const RunConfig& config) {
    if (config.oversample_n_bags == 0) return {};
    OversampleConfig ov;
    ov.n_extra_bags = config.oversample_n_bags;
    ov.max_bag_size = config.oversample_max_bag_size.value_or(default_max_bag_size(train));
    ExtraNegatives extra(train.n_labels);
    for (std::size_t l = 0; l < train.n_labels; ++l) {
        const bool has_negative = std::any_of(train.labels.begin(), train.labels.end(),
                                              [&](const LabelVector& y) { return y[l] == 0; });
        if (!has_negative) {
            extra[l] = Matrix(0, medoids.k());
            continue;
        }
        ov.seed = config.oversample_seed + 7919 * l;
        const auto bags = oversample_negatives(extract_negative_pool(train, l), ov, "l" + std::to_string(l) + "-");
        extra[l] = embed(bags, medoids);
    }
    return extra;
}

Matrix FittedPipeline::scores(const MimlDataset& data) const {
    const auto scaled = scaler.transform(data);
    return predict_scores(chain_model, embed(scaled.bags, *medoids));
}

FittedPipeline fit_pipeline(const MimlDataset& train, const RunConfig& config) {
    config.validate();
    FittedPipeline fitted;
    fitted.criterion = config.criterion;
    fitted.scaler = fit_scaler(train);
    const auto scaled = fitted.scaler.transform(train);

    const std::size_t k = resolve_cluster_k(config, scaled.n_bag());
    const auto dist = distance_matrix(scaled.bags, config.distance_variant);
    const auto clustering = kmedoids(dist, k, config.cluster_seed, config.cluster_max_iter);
    auto medoids = std::make_shared<MedoidSet>();
    medoids->variant = config.distance_variant;
    for (auto idx : clustering.medoids) medoids->medoids.push_back(scaled.bags[idx]);
    fitted.medoids = medoids;

    const auto z = embed_dataset(scaled, fitted.medoids);
    const auto extra = build_extra_negatives(scaled, *medoids, config);

    Chain chain;
    if (config.method == Method::chain_ga) {
        const auto holdout = stratified_holdout(scaled.labels, config.ga_val_fraction, config.ga.seed);
        const auto ga_extra = build_extra_negatives(scaled.subset(holdout.train), *medoids, config);
        const auto ga = ga_search(z.subset(holdout.train), z.subset(holdout.validation), config.ga,
                                  config.criterion, config.svm, ga_extra);
        chain = ga.best;
        fitted.ga_history = ga.history;
    }
    fitted.chain_model = train_chain(z, chain, config.svm, extra);
    return fitted;
}

MimlDataset load_configured_dataset(const RunConfig& config) {
    if (config.dataset_path.empty()) throw ConfigError("dataset.path is not set");
    return load_dataset(config.dataset_path, config.dataset_format.value_or(format_from_path(config.dataset_path)));
}

CvReport run_cv(const RunConfig& config, const MimlDataset& data, const FoldSplit& split) {
    config.validate();
    if (split.fold_assignments.size() != data.n_bag()) throw ConfigError("fold split does not match dataset");

    CvReport report;
    report.method = config.method;
    report.config_echo = config.echo();
    std::vector<FoldMetrics> folds;
    for (std::size_t fold = 0; fold < split.n_folds; ++fold) {
        const auto train = data.subset(split.train_indices(fold));
        const auto test = data.subset(split.test_indices(fold));
        try {
            std::set<std::string> train_ids;
            for (const auto& bag : train.bags) train_ids.insert(bag.bag_id);
            for (const auto& bag : test.bags) {
                leakage_guard(!is_synthetic_bag_id(bag.bag_id), "synthetic bag '" + bag.bag_id + "' in test fold");
                leakage_guard(!train_ids.contains(bag.bag_id), "bag '" + bag.bag_id + "' in both train and test");
            }

            const auto fitted = fit_pipeline(train, config);
            for (const auto& m : fitted.medoids->medoids) {
                leakage_guard(train_ids.contains(m.bag_id), "medoid '" + m.bag_id + "' is not a training bag");
            }

            const auto scores = fitted.scores(test);
            const auto predicted = binarize(scores, fitted.criterion);
            auto metrics = evaluate(test.labels, predicted, scores);
            if (config.method == Method::chain_ga) {
                metrics.chain_length = static_cast<double>(fitted.chain_model.chain.size());
            }
            folds.push_back(metrics);
            report.fold_chains.push_back(fitted.chain_model.chain);
        } catch (const ConfigError& e) {
            throw ConfigError("fold " + std::to_string(fold) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("fold " + std::to_string(fold) + ": " + e.what());
        } catch (const std::exception& e) {
            throw RuntimeFailure("fold " + std::to_string(fold) + ": " + e.what());
        }
    }
    report.eval = aggregate(folds);
    return report;
}

CvReport run_cv(const RunConfig& config, const MimlDataset& data) {
    config.validate();
    return run_cv(config, data, split_folds(data, config.cv_n_folds, config.cv_seed));
}

CvReport run_cv(const RunConfig& config) {
    config.validate();
    return run_cv(config, load_configured_dataset(config));
}

std::vector<CvReport> sweep(const RunConfig& config, const MimlDataset& data, std::string_view axis,
                            const std::vector<std::string>& values) {
    if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end()) {
        throw ConfigError("cannot sweep over '" + std::string(axis) + "'");
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<RunConfig> configs;
    for (const auto& v : values) {
        RunConfig c = config;
        c.set(axis, v);
        if (axis == "criterion.c_threshold") c.criterion.kind = BinarizationCriterion::Kind::C;
        c.validate();
        configs.push_back(std::move(c));
    }
    const auto split = split_folds(data, config.cv_n_folds, config.cv_seed);
    std::vector<CvReport> reports;
    for (const auto& c : configs) reports.push_back(run_cv(c, data, split));
    return reports;
}

std::vector<CvReport> sweep(const RunConfig& config, std::string_view axis, const std::vector<std::string>& values) {
    config.validate();
    return sweep(config, load_configured_dataset(config), axis, values);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json summary_json(const MetricSummary& s) {
    nlohmann::ordered_json j;
    j["mean"] = s.mean;
    j["std"] = s.std;
    return j;
}

nlohmann::ordered_json report_object(const CvReport& report) {
    nlohmann::ordered_json j;
    j["method"] = std::string(method_name(report.method));
    nlohmann::ordered_json metrics;
    const auto& e = report.eval;
    metrics["hamming_loss"] = summary_json(e.hamming_loss);
    metrics["accuracy"] = summary_json(e.accuracy);
    metrics["exact_match"] = summary_json(e.exact_match);
    metrics["rank_loss"] = summary_json(e.rank_loss);
    metrics["one_error"] = summary_json(e.one_error);
    metrics["coverage"] = summary_json(e.coverage);
    metrics["average_precision"] = summary_json(e.average_precision);
    metrics["avg_chain_length"] = e.avg_chain_length ? summary_json(*e.avg_chain_length) : nlohmann::ordered_json();
    j["metrics"] = std::move(metrics);

    auto per_fold = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < e.per_fold.size(); ++f) {
        const auto& m = e.per_fold[f];
        nlohmann::ordered_json fj;
        fj["fold"] = f;
        fj["hamming_loss"] = m.hamming_loss;
        fj["accuracy"] = m.accuracy;
        fj["exact_match"] = m.exact_match;
        fj["rank_loss"] = m.rank_loss;
        fj["one_error"] = m.one_error;
        fj["coverage"] = m.coverage;
        fj["average_precision"] = m.average_precision;
        fj["chain"] = f < report.fold_chains.size() ? report.fold_chains[f].order : std::vector<std::size_t>{};
        per_fold.push_back(std::move(fj));
    }
    j["per_fold"] = std::move(per_fold);

    nlohmann::ordered_json config;
    for (const auto& [k, v] : report.config_echo) config[k] = v;
    j["config"] = std::move(config);
    nlohmann::ordered_json metadata;
    metadata["assumptions"] = {"synthetic negative bags sample instances independently with replacement"};
    j["metadata"] = std::move(metadata);
    return j;
}

std::string pm(const MetricSummary& s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f+-%.3f", s.mean, s.std);
    return buf;
}

}  // namespace

std::string report_json(const CvReport& report) { return report_object(report).dump(2) + "\n"; }

std::string sweep_json(std::string_view axis, const std::vector<std::string>& values,
                       const std::vector<CvReport>& reports) {
    nlohmann::ordered_json j;
    j["axis"] = std::string(axis);
    auto runs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        nlohmann::ordered_json r;
        r["value"] = i < values.size() ? values[i] : "";
        r["report"] = report_object(reports[i]);
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    return j.dump(2) + "\n";
}

std::string report_table(const std::vector<CvReport>& reports, std::string_view axis,
                         const std::vector<std::string>& values) {
    std::ostringstream out;
    char line[512];
    const bool with_axis = !axis.empty();
    auto header_axis = with_axis ? std::string(axis) : std::string();
    if (with_axis) {
        std::snprintf(line, sizeof(line), "%-17s | %-22s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s\n",
                      "Method", header_axis.c_str(), "CL", "HL", "ACC", "EM", "Rank Loss", "One Error", "Coverage", "AP");
    } else {
        std::snprintf(line, sizeof(line), "%-17s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s\n",
                      "Method", "CL", "HL", "ACC", "EM", "Rank Loss", "One Error", "Coverage", "AP");
    }
    out << line;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& e = reports[i].eval;
        const std::string cl = e.avg_chain_length ? pm(*e.avg_chain_length) : "/";
        const std::string method(method_name(reports[i].method));
        if (with_axis) {
            const std::string v = i < values.size() ? values[i] : "";
            std::snprintf(line, sizeof(line),
                          "%-17s | %-22s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s\n",
                          method.c_str(), v.c_str(), cl.c_str(), pm(e.hamming_loss).c_str(), pm(e.accuracy).c_str(),
                          pm(e.exact_match).c_str(), pm(e.rank_loss).c_str(), pm(e.one_error).c_str(),
                          pm(e.coverage).c_str(), pm(e.average_precision).c_str());
        } else {
            std::snprintf(line, sizeof(line), "%-17s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s | %-13s\n",
                          method.c_str(), cl.c_str(), pm(e.hamming_loss).c_str(), pm(e.accuracy).c_str(),
                          pm(e.exact_match).c_str(), pm(e.rank_loss).c_str(), pm(e.one_error).c_str(),
                          pm(e.coverage).c_str(), pm(e.average_precision).c_str());
        }
        out << line;
    }
    return out.str();
}

}  // namespace miml
