#include "miml/bagdata.hpp"

#include "miml/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace miml {

namespace {

std::string at_line(std::size_t line, const std::string& msg) {
    return "line " + std::to_string(line) + ": " + msg;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view text, std::size_t line) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        throw DataError(at_line(line, "cannot parse number '" + std::string(text) + "'"));
    }
    return value;
}

std::uint8_t parse_label(std::string_view text, std::size_t line) {
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw DataError(at_line(line, "label must be 0 or 1, got '" + std::string(text) + "'"));
}

MimlDataset read_jsonl(std::istream& in) {
    MimlDataset ds;
    std::string raw;
    std::size_t line_no = 0;
    bool widths_known = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim_cr(raw);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(at_line(line_no, std::string("invalid JSON: ") + e.what()));
        }
        if (!record.is_object() || !record.contains("bag_id") || !record.contains("instances") ||
            !record.contains("labels")) {
            throw DataError(at_line(line_no, "expected object with bag_id, instances, labels"));
        }
        const auto& id = record["bag_id"];
        const auto& instances = record["instances"];
        const auto& labels = record["labels"];
        if (!id.is_string()) throw DataError(at_line(line_no, "bag_id must be a string"));
        if (!instances.is_array() || instances.empty()) {
            throw DataError(at_line(line_no, "instances must be a non-empty array"));
        }
        if (!labels.is_array()) throw DataError(at_line(line_no, "labels must be an array"));

        Bag bag;
        bag.bag_id = id.get<std::string>();
        for (const auto& inst : instances) {
            if (!inst.is_array()) throw DataError(at_line(line_no, "instance must be an array"));
            Instance x;
            x.reserve(inst.size());
            for (const auto& v : inst) {
                if (!v.is_number()) throw DataError(at_line(line_no, "feature must be a number"));
                x.push_back(v.get<double>());
            }
            bag.instances.push_back(std::move(x));
        }
        LabelVector y;
        for (const auto& v : labels) {
            if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
                throw DataError(at_line(line_no, "label must be 0 or 1"));
            }
            y.push_back(static_cast<std::uint8_t>(v.get<int>()));
        }

        if (!widths_known) {
            ds.n_feat = bag.instances.front().size();
            ds.n_labels = y.size();
            widths_known = true;
        }
        for (const auto& x : bag.instances) {
            if (x.size() != ds.n_feat) {
                throw DataError(at_line(line_no, "inconsistent feature length: expected " +
                                                     std::to_string(ds.n_feat) + ", got " +
                                                     std::to_string(x.size())));
            }
        }
        if (y.size() != ds.n_labels) {
            throw DataError(at_line(line_no, "label vector length mismatch: expected " +
                                                 std::to_string(ds.n_labels) + ", got " +
                                                 std::to_string(y.size())));
        }
        ds.bags.push_back(std::move(bag));
        ds.labels.push_back(std::move(y));
    }
    ds.label_names = default_label_names(ds.n_labels);
    return ds;
}

MimlDataset read_csv(std::istream& in) {
    MimlDataset ds;
    std::string raw;
    std::size_t line_no = 0;
    if (!std::getline(in, raw)) throw DataError("line 1: missing header");
    ++line_no;
    const auto header = split_commas(trim_cr(raw));
    if (header.empty() || header.front() != "bag_id") {
        throw DataError(at_line(1, "header must start with bag_id"));
    }
    std::size_t col = 1;
    while (col < header.size() && header[col].starts_with("f_")) ++col;
    ds.n_feat = col - 1;
    for (; col < header.size(); ++col) {
        if (!header[col].starts_with("y_")) {
            throw DataError(at_line(1, "unexpected column '" + std::string(header[col]) + "'"));
        }
        ds.label_names.emplace_back(header[col]);
    }
    ds.n_labels = ds.label_names.size();
    if (ds.n_feat == 0) throw DataError(at_line(1, "no feature columns"));

    std::map<std::string, std::size_t, std::less<>> index_of;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim_cr(raw);
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size()) {
            throw DataError(at_line(line_no, "expected " + std::to_string(header.size()) +
                                                 " columns, got " + std::to_string(cells.size())));
        }
        Instance x(ds.n_feat);
        for (std::size_t f = 0; f < ds.n_feat; ++f) x[f] = parse_double(cells[1 + f], line_no);
        LabelVector y(ds.n_labels);
        for (std::size_t l = 0; l < ds.n_labels; ++l) y[l] = parse_label(cells[1 + ds.n_feat + l], line_no);

        const std::string id(cells[0]);
        if (id.empty()) throw DataError(at_line(line_no, "empty bag_id"));
        auto it = index_of.find(id);
        if (it == index_of.end()) {
            index_of.emplace(id, ds.bags.size());
            ds.bags.push_back(Bag{id, {std::move(x)}, {}});
            ds.labels.push_back(std::move(y));
        } else {
            if (ds.labels[it->second] != y) {
                throw DataError(at_line(line_no, "labels differ from earlier rows of bag '" + id + "'"));
            }
            ds.bags[it->second].instances.push_back(std::move(x));
        }
    }
    return ds;
}

void write_jsonl(const MimlDataset& ds, std::ostream& out) {
    for (std::size_t i = 0; i < ds.n_bag(); ++i) {
        nlohmann::json record;
        record["bag_id"] = ds.bags[i].bag_id;
        auto instances = nlohmann::json::array();
        for (const auto& x : ds.bags[i].instances) instances.push_back(x);
        record["instances"] = std::move(instances);
        auto labels = nlohmann::json::array();
        for (auto v : ds.labels[i]) labels.push_back(static_cast<int>(v));
        record["labels"] = std::move(labels);
        out << record.dump() << '\n';
    }
}

void write_csv(const MimlDataset& ds, std::ostream& out) {
    out << "bag_id";
    for (std::size_t f = 0; f < ds.n_feat; ++f) out << ",f_" << f;
    for (const auto& name : ds.label_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < ds.n_bag(); ++i) {
        const auto& bag = ds.bags[i];
        if (bag.bag_id.find_first_of(",\n\r") != std::string::npos) {
            throw DataError("bag_id '" + bag.bag_id + "' cannot be written to instance-csv");
        }
        for (const auto& x : bag.instances) {
            out << bag.bag_id;
            for (double v : x) out << ',' << format_double(v);
            for (auto v : ds.labels[i]) out << ',' << static_cast<int>(v);
            out << '\n';
        }
    }
}

}  // namespace

std::vector<std::string> default_label_names(std::size_t n_labels) {
    std::vector<std::string> names;
    names.reserve(n_labels);
    for (std::size_t l = 0; l < n_labels; ++l) names.push_back("y_" + std::to_string(l));
    return names;
}

void MimlDataset::validate() const {
    if (bags.empty()) throw DataError("dataset has no bags");
    if (bags.size() != labels.size()) throw DataError("bag and label counts differ");
    if (n_feat == 0) throw DataError("n_feat must be positive");
    if (n_labels == 0) throw DataError("n_labels must be positive");
    if (label_names.size() != n_labels) throw DataError("label_names length differs from n_labels");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        const auto& bag = bags[i];
        if (!seen.insert(bag.bag_id).second) throw DataError("duplicate bag_id '" + bag.bag_id + "'");
        if (bag.instances.empty()) throw DataError("bag '" + bag.bag_id + "' has no instances");
        for (const auto& x : bag.instances) {
            if (x.size() != n_feat) {
                throw DataError("bag '" + bag.bag_id + "': inconsistent feature length");
            }
            for (double v : x) {
                if (!std::isfinite(v)) throw DataError("bag '" + bag.bag_id + "': non-finite feature");
            }
        }
        if (labels[i].size() != n_labels) {
            throw DataError("bag '" + bag.bag_id + "': label vector length mismatch");
        }
        for (auto v : labels[i]) {
            if (v > 1) throw DataError("bag '" + bag.bag_id + "': label must be 0 or 1");
        }
    }
}

MimlDataset MimlDataset::subset(std::span<const std::size_t> indices) const {
    MimlDataset out;
    out.n_feat = n_feat;
    out.n_labels = n_labels;
    out.label_names = label_names;
    out.bags.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        out.bags.push_back(bags.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

DatasetFormat parse_format(std::string_view name) {
    if (name == "bag-jsonl") return DatasetFormat::bag_jsonl;
    if (name == "instance-csv") return DatasetFormat::instance_csv;
    throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

std::string_view format_name(DatasetFormat format) {
    return format == DatasetFormat::bag_jsonl ? "bag-jsonl" : "instance-csv";
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DatasetFormat::instance_csv : DatasetFormat::bag_jsonl;
}

MimlDataset read_dataset(std::istream& in, DatasetFormat format) {
    auto ds = format == DatasetFormat::bag_jsonl ? read_jsonl(in) : read_csv(in);
    ds.validate();
    return ds;
}

MimlDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
    try {
        return read_dataset(in, format);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

MimlDataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

void write_dataset(const MimlDataset& ds, std::ostream& out, DatasetFormat format) {
    if (format == DatasetFormat::bag_jsonl) {
        write_jsonl(ds, out);
    } else {
        write_csv(ds, out);
    }
}

void write_dataset(const MimlDataset& ds, const std::filesystem::path& path, DatasetFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
    write_dataset(ds, out, format);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldSplit::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldSplit::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] != fold) out.push_back(i);
    }
    return out;
}

FoldSplit split_folds(std::size_t n_bag, std::size_t n_folds, std::uint64_t seed) {
    if (n_folds < 2 || n_folds > n_bag) {
        throw ConfigError("n_folds must lie in [2, n_bag]; got " + std::to_string(n_folds) + " for " +
                          std::to_string(n_bag) + " bags");
    }
    std::vector<std::size_t> order(n_bag);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldSplit split{std::vector<std::size_t>(n_bag), n_folds, seed};
    for (std::size_t pos = 0; pos < n_bag; ++pos) split.fold_assignments[order[pos]] = pos % n_folds;
    return split;
}

FoldSplit split_folds(const MimlDataset& ds, std::size_t n_folds, std::uint64_t seed) {
    return split_folds(ds.n_bag(), n_folds, seed);
}

// ---------------------------------------------------------------------------

MimlDataset generate_synthetic(const SynthSpec& spec) {
    if (spec.n_bag == 0 || spec.n_feat == 0 || spec.n_labels == 0) {
        throw ConfigError("synthetic generator needs positive n_bag, n_feat and n_labels");
    }
    if (spec.n_labels > 32) throw ConfigError("synthetic generator supports at most 32 labels");
    if (spec.ni_min < 1 || spec.ni_max < spec.ni_min) throw ConfigError("invalid bag size range");
    auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!is_prob(spec.label_rate) || !is_prob(spec.dep_present) || !is_prob(spec.dep_absent) ||
        (spec.p_instance && !is_prob(*spec.p_instance))) {
        throw ConfigError("synthetic probabilities must lie in [0,1]");
    }
    if (spec.noise < 0.0) throw ConfigError("synthetic noise must be non-negative");
    if (spec.separation_decay <= 0.0) throw ConfigError("synthetic separation_decay must be positive");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> bag_size(spec.ni_min, spec.ni_max);

    // Label cluster offsets: random directions scaled to `separation`.
    std::vector<Instance> offsets(spec.n_labels, Instance(spec.n_feat));
    double length = spec.separation;
    for (auto& d : offsets) {
        double norm = 0.0;
        do {
            for (auto& v : d) v = gauss(rng);
            norm = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
        } while (norm < 1e-12);
        for (auto& v : d) v *= length / norm;
        length *= spec.separation_decay;
    }

    MimlDataset ds;
    ds.n_feat = spec.n_feat;
    ds.n_labels = spec.n_labels;
    ds.label_names = default_label_names(spec.n_labels);
    const int width = static_cast<int>(std::to_string(spec.n_bag - 1).size());

    for (std::size_t b = 0; b < spec.n_bag; ++b) {
        const std::size_t n_i = bag_size(rng);
        std::vector<std::uint32_t> bits(n_i, 0);

        if (spec.p_instance) {
            for (auto& mask : bits) {
                for (std::size_t l = 0; l < spec.n_labels; ++l) {
                    if (unit(rng) < *spec.p_instance) mask |= (1u << l);
                }
            }
        } else {
            std::vector<bool> present(spec.n_labels);
            for (std::size_t l = 0; l < spec.n_labels; ++l) {
                double p = spec.label_rate;
                if (spec.chain_dependency && l > 0) p = present[l - 1] ? spec.dep_present : spec.dep_absent;
                present[l] = unit(rng) < p;
            }
            std::vector<std::size_t> slots(n_i);
            std::iota(slots.begin(), slots.end(), std::size_t{0});
            std::shuffle(slots.begin(), slots.end(), rng);
            std::size_t next = 0;
            for (std::size_t l = 0; l < spec.n_labels; ++l) {
                if (present[l]) bits[slots[next++ % n_i]] |= (1u << l);
            }
        }

        Bag bag;
        char id[32];
        std::snprintf(id, sizeof(id), "b%0*zu", width, b);
        bag.bag_id = id;
        LabelVector y(spec.n_labels, 0);
        for (std::size_t j = 0; j < n_i; ++j) {
            Instance x(spec.n_feat);
            for (auto& v : x) v = spec.noise * gauss(rng);
            for (std::size_t l = 0; l < spec.n_labels; ++l) {
                if (bits[j] & (1u << l)) {
                    y[l] = 1;
                    for (std::size_t f = 0; f < spec.n_feat; ++f) x[f] += offsets[l][f];
                }
            }
            bag.instances.push_back(std::move(x));
        }
        bag.provenance = std::move(bits);
        ds.bags.push_back(std::move(bag));
        ds.labels.push_back(std::move(y));
    }
    return ds;
}

// ---------------------------------------------------------------------------

Instance MinMaxScaler::transform(std::span<const double> x) const {
    if (x.size() != lower.size()) throw DataError("scaler: feature length mismatch");
    Instance out(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) {
        out[f] = range[f] > 0.0 ? (x[f] - lower[f]) / range[f] : 0.0;
    }
    return out;
}

Bag MinMaxScaler::transform(const Bag& bag) const {
    Bag out{bag.bag_id, {}, bag.provenance};
    out.instances.reserve(bag.size());
    for (const auto& x : bag.instances) out.instances.push_back(transform(x));
    return out;
}

MimlDataset MinMaxScaler::transform(const MimlDataset& ds) const {
    MimlDataset out;
    out.n_feat = ds.n_feat;
    out.n_labels = ds.n_labels;
    out.label_names = ds.label_names;
    out.labels = ds.labels;
    out.bags.reserve(ds.n_bag());
    for (const auto& bag : ds.bags) out.bags.push_back(transform(bag));
    return out;
}

MinMaxScaler fit_scaler(const MimlDataset& train) {
    if (train.bags.empty()) throw DataError("cannot fit scaler on an empty training set");
    std::vector<double> lo(train.n_feat, std::numeric_limits<double>::infinity());
    std::vector<double> hi(train.n_feat, -std::numeric_limits<double>::infinity());
    for (const auto& bag : train.bags) {
        for (const auto& x : bag.instances) {
            for (std::size_t f = 0; f < train.n_feat; ++f) {
                lo[f] = std::min(lo[f], x[f]);
                hi[f] = std::max(hi[f], x[f]);
            }
        }
    }
    MinMaxScaler scaler{lo, std::vector<double>(train.n_feat)};
    for (std::size_t f = 0; f < train.n_feat; ++f) scaler.range[f] = hi[f] - lo[f];
    return scaler;
}

NormalizedSets normalize_features(const MimlDataset& train, std::span<const MimlDataset> others) {
    NormalizedSets out;
    out.scaler = fit_scaler(train);
    out.train = out.scaler.transform(train);
    for (const auto& ds : others) out.others.push_back(out.scaler.transform(ds));
    return out;
}

}  // namespace miml
