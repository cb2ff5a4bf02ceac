// miml: command-line front end for cross-validation, sweeps, training,
// prediction and synthetic data generation.

#include "miml/bagdata.hpp"
#include "miml/config.hpp"
#include "miml/errors.hpp"
#include "miml/harness.hpp"
#include "miml/matrix.hpp"
#include "miml/model_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
};

miml::RunConfig resolve_config(const RunOptions& opts) {
    miml::RunConfig config = opts.config_path.empty() ? miml::RunConfig{} : miml::load_config(opts.config_path);
    for (const auto& o : opts.overrides) miml::apply_override(config, o);
    if (!opts.out.empty()) config.output = opts.out;
    config.validate();
    miml::set_thread_count(config.threads);
    return config;
}

void emit(const miml::RunConfig& config, const std::string& text) {
    if (config.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(config.output, std::ios::binary);
    if (!out) throw miml::DataError("cannot write " + config.output.string());
    out << text;
}

std::vector<std::string> split_values(const std::string& list) {
    std::vector<std::string> values;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) values.push_back(item.substr(b, e - b + 1));
    }
    return values;
}

void add_run_options(CLI::App* cmd, RunOptions& opts, bool require_config) {
    auto* c = cmd->add_option("--config", opts.config_path, "Config file (key = value lines)");
    if (require_config) c->required();
    cmd->add_option("--set", opts.overrides, "Override a config key: key=value (repeatable)");
    cmd->add_option("--out", opts.out, "Output path (defaults to the configured output, else stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-instance multi-label learning with classifier chains"};
    app.require_subcommand(1);

    RunOptions cv_opts;
    bool cv_table = false;
    auto* cv = app.add_subcommand("cv", "Cross-validated evaluation");
    add_run_options(cv, cv_opts, true);
    cv->add_flag("--table", cv_table, "Print a text table instead of JSON");

    RunOptions sweep_opts;
    std::string sweep_axis;
    std::string sweep_values;
    bool sweep_table = false;
    auto* sw = app.add_subcommand("sweep", "One cross-validated run per value of a config key");
    add_run_options(sw, sweep_opts, true);
    sw->add_option("--axis", sweep_axis, "svm.C, cluster.k, criterion.c_threshold or oversample.n_bags")->required();
    sw->add_option("--values", sweep_values, "Comma-separated values")->required();
    sw->add_flag("--table", sweep_table, "Print a text table instead of JSON");

    RunOptions train_opts;
    auto* train = app.add_subcommand("train", "Fit on the whole dataset and save a model");
    add_run_options(train, train_opts, true);

    std::string model_path;
    std::string predict_data;
    std::string predict_format;
    std::string predict_out;
    auto* predict = app.add_subcommand("predict", "Score bags with a saved model");
    predict->add_option("--model", model_path, "Model file")->required();
    predict->add_option("--data", predict_data, "Dataset to score")->required();
    predict->add_option("--format", predict_format, "bag-jsonl or instance-csv");
    predict->add_option("--out", predict_out, "Predictions file (stdout if omitted)");

    miml::SynthSpec synth;
    std::string synth_out;
    std::string synth_format;
    std::optional<double> p_instance;
    auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset");
    gen->add_option("--out", synth_out, "Output dataset path")->required();
    gen->add_option("--format", synth_format, "bag-jsonl or instance-csv");
    gen->add_option("--bags", synth.n_bag, "Number of bags");
    gen->add_option("--labels", synth.n_labels, "Number of labels");
    gen->add_option("--feat", synth.n_feat, "Features per instance");
    gen->add_option("--ni-min", synth.ni_min, "Smallest bag");
    gen->add_option("--ni-max", synth.ni_max, "Largest bag");
    gen->add_option("--label-rate", synth.label_rate, "Probability that a label is present");
    gen->add_option("--separation", synth.separation, "Distance of each label cluster from the origin");
    gen->add_option("--noise", synth.noise, "Instance noise standard deviation");
    gen->add_option("--chain-dep", synth.chain_dependency, "true: each label depends on its predecessor");
    gen->add_option("--seed", synth.seed, "Random seed");
    gen->add_option("--p-instance", p_instance, "Per-instance label probability");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cv->parsed()) {
            const auto config = resolve_config(cv_opts);
            const auto report = miml::run_cv(config);
            emit(config, cv_table ? miml::report_table({report}) : miml::report_json(report));
        } else if (sw->parsed()) {
            const auto config = resolve_config(sweep_opts);
            const auto values = split_values(sweep_values);
            const auto reports = miml::sweep(config, sweep_axis, values);
            emit(config, sweep_table ? miml::report_table(reports, sweep_axis, values)
                                     : miml::sweep_json(sweep_axis, values, reports));
        } else if (train->parsed()) {
            const auto config = resolve_config(train_opts);
            if (config.output.empty()) throw miml::ConfigError("train needs --out or an output key");
            const auto data = miml::load_configured_dataset(config);
            miml::save_model(miml::train_model(config, data), config.output);
        } else if (predict->parsed()) {
            const auto model = miml::load_model(model_path);
            const auto fmt = predict_format.empty() ? miml::format_from_path(predict_data)
                                                    : miml::parse_format(predict_format);
            const auto data = miml::load_dataset(predict_data, fmt);
            if (predict_out.empty()) {
                miml::write_predictions(model, data, std::cout);
            } else {
                std::ofstream out(predict_out, std::ios::binary);
                if (!out) throw miml::DataError("cannot write " + predict_out);
                miml::write_predictions(model, data, out);
            }
        } else if (gen->parsed()) {
            synth.p_instance = p_instance;
            const auto fmt = synth_format.empty() ? miml::format_from_path(synth_out)
                                                  : miml::parse_format(synth_format);
            miml::write_dataset(miml::generate_synthetic(synth), synth_out, fmt);
        }
    } catch (const miml::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const miml::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
