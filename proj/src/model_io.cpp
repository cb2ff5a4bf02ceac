#include "miml/model_io.hpp"

#include "miml/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace miml {

namespace {

constexpr std::string_view kMagic = "MIMLMODL";

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        size(s.size());
        buf_.append(s);
    }
    void doubles(std::span<const double> v) {
        size(v.size());
        for (double d : v) f64(d);
    }
    void matrix(const Matrix& m) {
        size(m.rows());
        size(m.cols());
        for (double d : m.data()) f64(d);
    }
    void raw(std::string_view s) { buf_.append(s); }

    std::string& buffer() { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return v;
    }
    std::size_t size() {
        const auto v = u64();
        if (v > bytes_.size()) throw DataError("model file is corrupt (implausible length)");
        return static_cast<std::size_t>(v);
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = size();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::vector<double> doubles() {
        const auto n = size();
        std::vector<double> v(n);
        for (auto& d : v) d = f64();
        return v;
    }
    Matrix matrix() {
        const auto rows = size();
        const auto cols = size();
        if (cols != 0 && rows > bytes_.size() / cols) throw DataError("model file is corrupt (implausible matrix)");
        Matrix m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) m(r, c) = f64();
        return m;
    }
    std::string_view raw(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw DataError("model file is truncated");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void write_bag(Writer& w, const Bag& bag) {
    w.str(bag.bag_id);
    w.size(bag.instances.size());
    for (const auto& inst : bag.instances) w.doubles(inst);
}

Bag read_bag(Reader& r) {
    Bag bag;
    bag.bag_id = r.str();
    bag.instances.resize(r.size());
    for (auto& inst : bag.instances) inst = r.doubles();
    return bag;
}

void write_svm(Writer& w, const SvmModel& m) {
    w.matrix(m.support_vectors);
    w.doubles(m.dual_coefs);
    w.f64(m.bias);
    w.u8(static_cast<std::uint8_t>(m.kernel.kind));
    w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(m.kernel.degree)));
    w.f64(m.kernel.coef0);
    w.f64(m.kernel.gamma);
    w.f64(m.C);
    w.size(m.n_features);
    w.u8(m.constant_probability ? 1 : 0);
    if (m.constant_probability) w.f64(*m.constant_probability);
    w.u8(m.calibration ? 1 : 0);
    if (m.calibration) {
        w.f64(m.calibration->A);
        w.f64(m.calibration->B);
        w.u8(m.calibration->fallback ? 1 : 0);
    }
    w.size(m.iterations);
    w.u8(m.converged ? 1 : 0);
}

SvmModel read_svm(Reader& r) {
    SvmModel m;
    m.support_vectors = r.matrix();
    m.dual_coefs = r.doubles();
    m.bias = r.f64();
    const auto kind = r.u8();
    if (kind > 1) throw DataError("model file is corrupt (unknown kernel)");
    m.kernel.kind = static_cast<KernelKind>(kind);
    m.kernel.degree = static_cast<int>(static_cast<std::int64_t>(r.u64()));
    m.kernel.coef0 = r.f64();
    m.kernel.gamma = r.f64();
    m.C = r.f64();
    m.n_features = r.size();
    if (r.u8()) m.constant_probability = r.f64();
    if (r.u8()) {
        PlattParams p;
        p.A = r.f64();
        p.B = r.f64();
        p.fallback = r.u8() != 0;
        m.calibration = p;
    }
    m.iterations = r.size();
    m.converged = r.u8() != 0;
    if (m.dual_coefs.size() != m.support_vectors.rows()) throw DataError("model file is corrupt (svm)");
    return m;
}

void write_indices(Writer& w, const std::vector<std::size_t>& v) {
    w.size(v.size());
    for (auto i : v) w.size(i);
}

std::vector<std::size_t> read_indices(Reader& r) {
    std::vector<std::size_t> v(r.size());
    for (auto& i : v) i = r.size();
    return v;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::equal(a.data().begin(), a.data().end(), b.data().begin(), [](double x, double y) {
        return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
    });
}

}  // namespace

Matrix TrainedModel::scores(std::span<const Bag> bags) const {
    std::vector<Bag> scaled;
    scaled.reserve(bags.size());
    for (const auto& bag : bags) {
        for (const auto& inst : bag.instances) {
            if (inst.size() != n_feat) {
                throw DataError("bag '" + bag.bag_id + "' has " + std::to_string(inst.size()) +
                                " features, model expects " + std::to_string(n_feat));
            }
        }
        scaled.push_back(scaler.transform(bag));
    }
    return predict_scores(chain_model, embed(scaled, medoids));
}

Matrix TrainedModel::scores(const MimlDataset& data) const { return scores(std::span<const Bag>(data.bags)); }

TrainedModel train_model(const RunConfig& config, const MimlDataset& data) {
    const auto fitted = fit_pipeline(data, config);
    TrainedModel model;
    model.scaler = fitted.scaler;
    model.medoids = *fitted.medoids;
    model.chain_model = fitted.chain_model;
    model.criterion = fitted.criterion;
    model.config_echo = config.echo();
    model.label_names = data.label_names;
    model.n_feat = data.n_feat;
    const auto n_probe = std::min(kMaxProbeBags, data.n_bag());
    for (std::size_t i = 0; i < n_probe; ++i) {
        Bag probe = data.bags[i];
        probe.provenance.clear();
        model.probes.push_back(std::move(probe));
    }
    model.probe_scores = model.scores(std::span<const Bag>(model.probes));
    return model;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string serialize_model(const TrainedModel& model) {
    Writer w;
    w.raw(kMagic);
    w.u32(kModelFormatVersion);

    w.size(model.n_feat);
    w.size(model.label_names.size());
    for (const auto& name : model.label_names) w.str(name);

    w.doubles(model.scaler.lower);
    w.doubles(model.scaler.range);

    w.u8(static_cast<std::uint8_t>(model.medoids.variant));
    w.size(model.medoids.medoids.size());
    for (const auto& bag : model.medoids.medoids) write_bag(w, bag);

    const auto& cm = model.chain_model;
    write_indices(w, cm.chain.order);
    w.size(cm.n_labels);
    w.size(cm.width);
    w.size(cm.chained_svms.size());
    for (const auto& m : cm.chained_svms) write_svm(w, m);
    write_indices(w, cm.independent_labels);
    w.size(cm.independent_svms.size());
    for (const auto& m : cm.independent_svms) write_svm(w, m);

    w.u8(static_cast<std::uint8_t>(model.criterion.kind));
    w.f64(model.criterion.c_threshold);

    w.size(model.config_echo.size());
    for (const auto& [k, v] : model.config_echo) {
        w.str(k);
        w.str(v);
    }

    w.size(model.probes.size());
    for (const auto& bag : model.probes) write_bag(w, bag);
    w.matrix(model.probe_scores);

    const auto checksum = fnv1a64(w.buffer());
    w.u64(checksum);
    return std::move(w.buffer());
}

TrainedModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < kMagic.size() + 4 + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
        throw DataError("not a miml model file");
    }
    Reader header(bytes.substr(kMagic.size(), 4));
    const auto version = header.u32();
    if (version != kModelFormatVersion) {
        throw DataError("unsupported model format version " + std::to_string(version) + " (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    const auto body = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.u64() != fnv1a64(body)) throw DataError("model file is corrupt (checksum mismatch)");

    Reader r(body.substr(kMagic.size() + 4));
    TrainedModel model;
    model.n_feat = r.size();
    model.label_names.resize(r.size());
    for (auto& name : model.label_names) name = r.str();

    model.scaler.lower = r.doubles();
    model.scaler.range = r.doubles();

    const auto variant = r.u8();
    if (variant > 1) throw DataError("model file is corrupt (unknown distance variant)");
    model.medoids.variant = static_cast<HausdorffVariant>(variant);
    model.medoids.medoids.resize(r.size());
    for (auto& bag : model.medoids.medoids) bag = read_bag(r);

    auto& cm = model.chain_model;
    cm.chain.order = read_indices(r);
    cm.n_labels = r.size();
    cm.width = r.size();
    cm.chained_svms.resize(r.size());
    for (auto& m : cm.chained_svms) m = read_svm(r);
    cm.independent_labels = read_indices(r);
    cm.independent_svms.resize(r.size());
    for (auto& m : cm.independent_svms) m = read_svm(r);

    const auto kind = r.u8();
    if (kind > 1) throw DataError("model file is corrupt (unknown criterion)");
    model.criterion.kind = static_cast<BinarizationCriterion::Kind>(kind);
    model.criterion.c_threshold = r.f64();

    model.config_echo.resize(r.size());
    for (auto& [k, v] : model.config_echo) {
        k = r.str();
        v = r.str();
    }

    model.probes.resize(r.size());
    for (auto& bag : model.probes) bag = read_bag(r);
    model.probe_scores = r.matrix();
    if (!r.done()) throw DataError("model file is corrupt (trailing bytes)");

    if (!cm.chain.is_valid(cm.n_labels) || cm.chained_svms.size() != cm.chain.size() ||
        cm.independent_svms.size() != cm.independent_labels.size() ||
        cm.chain.size() + cm.independent_labels.size() != cm.n_labels || cm.width != model.medoids.k() ||
        model.scaler.lower.size() != model.n_feat || model.scaler.range.size() != model.n_feat ||
        model.label_names.size() != cm.n_labels) {
        throw DataError("model file is corrupt (inconsistent shapes)");
    }

    if (!bitwise_equal(model.scores(std::span<const Bag>(model.probes)), model.probe_scores)) {
        throw RuntimeFailure("loaded model does not reproduce its stored probe predictions");
    }
    return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing model file " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path.string());
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return deserialize_model(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_predictions(const TrainedModel& model, const MimlDataset& data, std::ostream& out) {
    const auto scores = model.scores(data);
    for (std::size_t i = 0; i < data.n_bag(); ++i) {
        const auto row = scores.row(i);
        const auto labels = binarize(row, model.criterion);
        nlohmann::ordered_json j;
        j["bag_id"] = data.bags[i].bag_id;
        j["scores"] = std::vector<double>(row.begin(), row.end());
        j["labels"] = std::vector<int>(labels.begin(), labels.end());
        out << j.dump() << '\n';
    }
}

}  // namespace miml
