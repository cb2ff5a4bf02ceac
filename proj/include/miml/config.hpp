#pragma once

#include "miml/bagdata.hpp"
#include "miml/chain_ga.hpp"
#include "miml/hausdorff.hpp"
#include "miml/kernel_svm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace miml {

enum class Method { mimlsvm_baseline, chain_ga };

Method parse_method(std::string_view name);
std::string_view method_name(Method method);

/// Everything a cross-validated run needs. Keys of the flat config file map
/// one-to-one onto fields; see `RunConfig::keys()`.
struct RunConfig {
    std::filesystem::path dataset_path;
    std::optional<DatasetFormat> dataset_format;  // inferred from the extension when absent

    std::optional<std::size_t> cluster_k;  // absent: 300 for >= 1000 training bags, else 7
    std::size_t cluster_max_iter = 100;
    std::uint64_t cluster_seed = 0;
    HausdorffVariant distance_variant = HausdorffVariant::max;

    SvmConfig svm;
    GaConfig ga;
    double ga_val_fraction = 0.25;
    BinarizationCriterion criterion;

    std::size_t oversample_n_bags = 0;
    std::optional<std::size_t> oversample_max_bag_size;  // absent: largest training bag
    std::uint64_t oversample_seed = 0;

    std::size_t cv_n_folds = 5;
    std::uint64_t cv_seed = 0;

    Method method = Method::chain_ga;
    std::filesystem::path output;
    unsigned threads = 0;

    /// Sets one key from its textual value; throws ConfigError on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Cross-field checks run before any computation.
    void validate() const;
    /// Canonical key/value listing in a fixed order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> echo() const;

    static const std::vector<std::string>& keys();
};

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
RunConfig parse_config(std::string_view text);
/// Relative dataset/output paths are resolved against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);

/// Applies a `key=value` override string.
void apply_override(RunConfig& config, std::string_view assignment);

std::size_t resolve_cluster_k(const RunConfig& config, std::size_t n_train);

}  // namespace miml
