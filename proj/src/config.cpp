#include "miml/config.hpp"

#include "miml/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace miml {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string bad_value(std::string_view key, std::string_view value) {
    return "invalid value '" + std::string(value) + "' for " + std::string(key);
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
        throw ConfigError(bad_value(key, value));
    }
    return out;
}

double to_double(std::string_view key, std::string_view value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
        throw ConfigError(bad_value(key, value));
    }
    return out;
}

std::string num(double v) { return format_double(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

}  // namespace

Method parse_method(std::string_view name) {
    if (name == "mimlsvm-baseline") return Method::mimlsvm_baseline;
    if (name == "chain-ga") return Method::chain_ga;
    throw ConfigError("method must be mimlsvm-baseline or chain-ga, got '" + std::string(name) + "'");
}

std::string_view method_name(Method method) {
    return method == Method::chain_ga ? "chain-ga" : "mimlsvm-baseline";
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> all = {
        "dataset.path",      "dataset.format",        "cluster.k",          "cluster.max_iter",
        "cluster.seed",      "distance.variant",      "svm.C",              "svm.kernel",
        "svm.degree",        "svm.coef0",             "svm.gamma",          "svm.tol",
        "svm.max_iter",      "ga.population",         "ga.tournament",      "ga.generations",
        "ga.mutation_len",   "ga.seed",               "ga.crossover_rate",  "ga.mutation_rate",
        "ga.stagnation",     "ga.val_fraction",       "criterion.kind",     "criterion.c_threshold",
        "oversample.n_bags", "oversample.max_bag_size", "oversample.seed",  "cv.n_folds",
        "cv.seed",           "method",                "output",             "threads",
    };
    return all;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
    const auto value = trim(raw);
    if (key == "dataset.path") dataset_path = std::string(value);
    else if (key == "dataset.format") dataset_format = parse_format(value);
    else if (key == "cluster.k") {
        if (value == "auto") cluster_k.reset();
        else cluster_k = to_uint(key, value);
    }
    else if (key == "cluster.max_iter") cluster_max_iter = to_uint(key, value);
    else if (key == "cluster.seed") cluster_seed = to_uint(key, value);
    else if (key == "distance.variant") distance_variant = parse_hausdorff_variant(value);
    else if (key == "svm.C") svm.C = to_double(key, value);
    else if (key == "svm.kernel") svm.kernel.kind = parse_kernel_kind(value);
    else if (key == "svm.degree") svm.kernel.degree = static_cast<int>(to_uint(key, value));
    else if (key == "svm.coef0") svm.kernel.coef0 = to_double(key, value);
    else if (key == "svm.gamma") svm.kernel.gamma = to_double(key, value);
    else if (key == "svm.tol") svm.tol = to_double(key, value);
    else if (key == "svm.max_iter") svm.max_iter = to_uint(key, value);
    else if (key == "ga.population") ga.population_size = to_uint(key, value);
    else if (key == "ga.tournament") ga.tournament_size = to_uint(key, value);
    else if (key == "ga.generations") ga.generations = to_uint(key, value);
    else if (key == "ga.mutation_len") ga.max_mutation_length_change = to_uint(key, value);
    else if (key == "ga.seed") ga.seed = to_uint(key, value);
    else if (key == "ga.crossover_rate") ga.crossover_rate = to_double(key, value);
    else if (key == "ga.mutation_rate") ga.mutation_rate = to_double(key, value);
    else if (key == "ga.stagnation") ga.stagnation_limit = to_uint(key, value);
    else if (key == "ga.val_fraction") ga_val_fraction = to_double(key, value);
    else if (key == "criterion.kind") criterion.kind = parse_criterion_kind(value);
    else if (key == "criterion.c_threshold") criterion.c_threshold = to_double(key, value);
    else if (key == "oversample.n_bags") oversample_n_bags = to_uint(key, value);
    else if (key == "oversample.max_bag_size") {
        if (value == "auto") oversample_max_bag_size.reset();
        else oversample_max_bag_size = to_uint(key, value);
    }
    else if (key == "oversample.seed") oversample_seed = to_uint(key, value);
    else if (key == "cv.n_folds") cv_n_folds = to_uint(key, value);
    else if (key == "cv.seed") cv_seed = to_uint(key, value);
    else if (key == "method") method = parse_method(value);
    else if (key == "output") output = std::string(value);
    else if (key == "threads") threads = static_cast<unsigned>(to_uint(key, value));
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    if (cluster_k && *cluster_k < 1) throw ConfigError("cluster.k must be at least 1");
    if (cluster_max_iter < 1) throw ConfigError("cluster.max_iter must be at least 1");
    svm.validate();
    ga.validate();
    criterion.validate();
    if (!(ga_val_fraction > 0.0 && ga_val_fraction < 1.0)) throw ConfigError("ga.val_fraction must lie in (0, 1)");
    if (oversample_max_bag_size && *oversample_max_bag_size < 2) {
        throw ConfigError("oversample.max_bag_size must be at least 2");
    }
    if (cv_n_folds < 2) throw ConfigError("cv.n_folds must be at least 2");
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    return {
        {"dataset.path", dataset_path.generic_string()},
        {"dataset.format", dataset_format ? std::string(format_name(*dataset_format)) : "auto"},
        {"cluster.k", cluster_k ? num(static_cast<std::uint64_t>(*cluster_k)) : "auto"},
        {"cluster.max_iter", num(static_cast<std::uint64_t>(cluster_max_iter))},
        {"cluster.seed", num(cluster_seed)},
        {"distance.variant", std::string(variant_name(distance_variant))},
        {"svm.C", num(svm.C)},
        {"svm.kernel", std::string(kernel_name(svm.kernel.kind))},
        {"svm.degree", std::to_string(svm.kernel.degree)},
        {"svm.coef0", num(svm.kernel.coef0)},
        {"svm.gamma", num(svm.kernel.gamma)},
        {"svm.tol", num(svm.tol)},
        {"svm.max_iter", num(static_cast<std::uint64_t>(svm.max_iter))},
        {"ga.population", num(static_cast<std::uint64_t>(ga.population_size))},
        {"ga.tournament", num(static_cast<std::uint64_t>(ga.tournament_size))},
        {"ga.generations", num(static_cast<std::uint64_t>(ga.generations))},
        {"ga.mutation_len", num(static_cast<std::uint64_t>(ga.max_mutation_length_change))},
        {"ga.seed", num(ga.seed)},
        {"ga.crossover_rate", num(ga.crossover_rate)},
        {"ga.mutation_rate", num(ga.mutation_rate)},
        {"ga.stagnation", num(static_cast<std::uint64_t>(ga.stagnation_limit))},
        {"ga.val_fraction", num(ga_val_fraction)},
        {"criterion.kind", criterion.kind == BinarizationCriterion::Kind::T ? "T" : "C"},
        {"criterion.c_threshold", num(criterion.c_threshold)},
        {"oversample.n_bags", num(static_cast<std::uint64_t>(oversample_n_bags))},
        {"oversample.max_bag_size",
         oversample_max_bag_size ? num(static_cast<std::uint64_t>(*oversample_max_bag_size)) : "auto"},
        {"oversample.seed", num(oversample_seed)},
        {"cv.n_folds", num(static_cast<std::uint64_t>(cv_n_folds))},
        {"cv.seed", num(cv_seed)},
        {"method", std::string(method_name(method))},
        {"output", output.generic_string()},
        {"threads", std::to_string(threads)},
    };
}

RunConfig parse_config(std::string_view text) {
    RunConfig config;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto config = parse_config(buffer.str());
    const auto base = path.parent_path();
    if (!config.dataset_path.empty() && config.dataset_path.is_relative()) {
        config.dataset_path = base / config.dataset_path;
    }
    if (!config.output.empty() && config.output.is_relative()) config.output = base / config.output;
    return config;
}

void apply_override(RunConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
    }
    config.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::size_t resolve_cluster_k(const RunConfig& config, std::size_t n_train) {
    const std::size_t k = config.cluster_k ? *config.cluster_k : (n_train >= 1000 ? 300 : 7);
    if (config.cluster_k && k > n_train) {
        throw ConfigError("cluster.k = " + std::to_string(k) + " exceeds the " + std::to_string(n_train) +
                          " training bags of a fold");
    }
    return std::min(k, n_train);
}

}  // namespace miml
