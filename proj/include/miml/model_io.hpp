#pragma once

#include "miml/bagdata.hpp"
#include "miml/chain_ga.hpp"
#include "miml/config.hpp"
#include "miml/harness.hpp"
#include "miml/medoid_embed.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace miml {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::size_t kMaxProbeBags = 3;

struct TrainedModel {
    MinMaxScaler scaler;
    MedoidSet medoids;
    ChainModel chain_model;
    BinarizationCriterion criterion;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<std::string> label_names;
    std::size_t n_feat = 0;

    /// Raw bags kept with the model and their scores at save time.
    std::vector<Bag> probes;
    Matrix probe_scores;

    [[nodiscard]] Matrix scores(const MimlDataset& data) const;
    [[nodiscard]] Matrix scores(std::span<const Bag> bags) const;
};

/// Fits the pipeline on the whole dataset and stores the first bags as probes.
TrainedModel train_model(const RunConfig& config, const MimlDataset& data);

std::uint64_t fnv1a64(std::string_view bytes);

/// Layout: "MIMLMODL", u32 version, payload, u64 FNV-1a of everything before it.
std::string serialize_model(const TrainedModel& model);
/// Throws DataError on a bad magic, version mismatch, truncation or checksum
/// failure; RuntimeFailure when the probes no longer reproduce their scores.
TrainedModel deserialize_model(std::string_view bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// One JSON object per line: {"bag_id", "scores": [...], "labels": [...]}.
void write_predictions(const TrainedModel& model, const MimlDataset& data, std::ostream& out);

}  // namespace miml
