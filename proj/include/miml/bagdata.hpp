#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace miml {

/// One feature vector inside a bag.
using Instance = std::vector<double>;

/// Binary relevance vector over the label alphabet (entries are 0 or 1).
using LabelVector = std::vector<std::uint8_t>;

struct Bag {
    std::string bag_id;
    std::vector<Instance> instances;
    /// Generator provenance: bit l of entry j is set when instance j was drawn
    /// from label cluster l. Empty for bags read from files.
    std::vector<std::uint32_t> provenance;

    [[nodiscard]] std::size_t size() const noexcept { return instances.size(); }
    [[nodiscard]] std::size_t n_feat() const noexcept {
        return instances.empty() ? 0 : instances.front().size();
    }
};

struct MimlDataset {
    std::vector<Bag> bags;
    std::vector<LabelVector> labels;
    std::size_t n_feat = 0;
    std::size_t n_labels = 0;
    std::vector<std::string> label_names;

    [[nodiscard]] std::size_t n_bag() const noexcept { return bags.size(); }

    /// Throws DataError on the first violated invariant.
    void validate() const;

    /// Bags (with their labels) at the given indices, in that order.
    [[nodiscard]] MimlDataset subset(std::span<const std::size_t> indices) const;
};

std::vector<std::string> default_label_names(std::size_t n_labels);

enum class DatasetFormat { bag_jsonl, instance_csv };

DatasetFormat parse_format(std::string_view name);
std::string_view format_name(DatasetFormat format);
/// `.csv` selects instance-csv, anything else bag-jsonl.
DatasetFormat format_from_path(const std::filesystem::path& path);

MimlDataset read_dataset(std::istream& in, DatasetFormat format);
MimlDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
MimlDataset load_dataset(const std::filesystem::path& path);

void write_dataset(const MimlDataset& ds, std::ostream& out, DatasetFormat format);
void write_dataset(const MimlDataset& ds, const std::filesystem::path& path, DatasetFormat format);

/// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Cross-validation folds

struct FoldSplit {
    std::vector<std::size_t> fold_assignments;
    std::size_t n_folds = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<std::size_t> test_indices(std::size_t fold) const;
    [[nodiscard]] std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Seeded shuffle of bag indices dealt round-robin into folds; sizes differ by at most one.
FoldSplit split_folds(std::size_t n_bag, std::size_t n_folds, std::uint64_t seed);
FoldSplit split_folds(const MimlDataset& ds, std::size_t n_folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data

/// Parameters of the synthetic MIML generator.
///
/// Every instance is Gaussian noise around the sum of the offsets of the label
/// clusters it was drawn from (the background cluster sits at the origin), so an
/// instance drawn from a single cluster l is a sample of cluster l. A bag is
/// positive for label l iff at least one of its instances came from cluster l.
///
/// Bag-level mode (default): label l is present with probability `label_rate`;
/// with `chain_dependency`, label l > 0 is present with probability
/// `dep_present` when label l-1 is present and `dep_absent` otherwise. Each
/// present label is planted in at least one instance.
///
/// Instance-level mode (`p_instance` set): each instance independently belongs
/// to each label cluster with probability p_instance.
struct SynthSpec {
    std::size_t n_bag = 200;
    std::size_t ni_min = 2;
    std::size_t ni_max = 5;
    std::size_t n_feat = 8;
    std::size_t n_labels = 3;
    bool chain_dependency = false;
    std::uint64_t seed = 0;

    double label_rate = 0.35;
    double dep_present = 0.9;
    double dep_absent = 0.1;
    double separation = 3.0;
    /// Label l's cluster sits at distance separation * separation_decay^l.
    double separation_decay = 1.0;
    double noise = 0.5;
    std::optional<double> p_instance;
};

MimlDataset generate_synthetic(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Feature scaling

/// Per-feature min-max scaler. Constant training features map to 0.
struct MinMaxScaler {
    std::vector<double> lower;
    std::vector<double> range;  // 0 marks a constant feature

    [[nodiscard]] Instance transform(std::span<const double> x) const;
    [[nodiscard]] Bag transform(const Bag& bag) const;
    [[nodiscard]] MimlDataset transform(const MimlDataset& ds) const;
};

MinMaxScaler fit_scaler(const MimlDataset& train);

struct NormalizedSets {
    MimlDataset train;
    std::vector<MimlDataset> others;
    MinMaxScaler scaler;
};

NormalizedSets normalize_features(const MimlDataset& train, std::span<const MimlDataset> others);

}  // namespace miml
