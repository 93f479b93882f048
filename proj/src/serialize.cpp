#include "kcf/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kcf/errors.hpp"

namespace kcf::io {

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ParseError("matrix rows have different lengths");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const Json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

std::string config_hash(const Json& j) {
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json provenance(std::uint64_t seed, const Json& config) {
    return {{"tool_version", kToolVersion}, {"seed", seed}, {"config_hash", config_hash(config)}};
}

Json family_to_json(const FamilySpec& f) {
    Json j{{"kind", to_string(f.kind)}, {"activation", to_string(f.activation)}};
    switch (f.kind) {
        case FamilySpec::Kind::Polynomial:
            j["degree"] = f.degree;
            break;
        case FamilySpec::Kind::Mlp:
            j["widths"] = f.widths;
            break;
        case FamilySpec::Kind::ResidualMlp:
            j["blocks"] = f.blocks;
            j["width"] = f.width;
            break;
    }
    return j;
}

FamilySpec family_from_json(const Json& j) {
    FamilySpec f;
    f.kind = parse_family_kind(j.at("kind").get<std::string>());
    f.activation = parse_activation(j.value("activation", std::string("relu")));
    f.degree = j.value("degree", 2);
    f.widths = j.value("widths", std::vector<int>{});
    f.blocks = j.value("blocks", 0);
    f.width = j.value("width", 0);
    f.validate();
    return f;
}

Json dictionary_to_json(const ParametricDictionary& d) {
    Json head = Json::array();
    for (int i : d.fixed_head()) head.push_back("x" + std::to_string(i + 1));
    std::vector<double> params(d.params().data(), d.params().data() + d.params().size());
    return {{"kind", "parametric"},
            {"family", family_to_json(d.spec())},
            {"dims", {{"n", d.state_dim()}, {"m", d.input_dim()}, {"s", d.s()}, {"l", d.l()}}},
            {"fixed_head", head},
            {"x_scale", vector_to_json(d.x_scale)},
            {"u_scale", vector_to_json(d.u_scale)},
            {"parameters", params}};
}

ParametricDictionary parametric_from_json(const Json& j) {
    if (j.value("kind", std::string()) != "parametric") throw ParseError("dictionary JSON is not parametric");
    const Json& dims = j.at("dims");
    std::vector<int> head;
    for (const auto& tag : j.value("fixed_head", Json::array())) {
        const auto t = tag.get<std::string>();
        if (t.size() < 2 || t[0] != 'x') throw ParseError("fixed_head tags must look like x1, x2, ...");
        head.push_back(std::stoi(t.substr(1)) - 1);
    }
    ParametricDictionary d(family_from_json(j.at("family")), dims.at("n").get<int>(), dims.at("m").get<int>(),
                           dims.at("s").get<int>(), dims.at("l").get<int>(), head);
    if (j.contains("x_scale")) d.x_scale = vector_from_json(j["x_scale"]);
    if (j.contains("u_scale")) d.u_scale = vector_from_json(j["u_scale"]);
    if (j.contains("parameters")) {
        const auto p = j["parameters"].get<std::vector<double>>();
        if (static_cast<int>(p.size()) != d.num_params())
            throw ParseError("dictionary JSON has " + std::to_string(p.size()) + " parameters, family needs " +
                             std::to_string(d.num_params()));
        d.params() = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
    } else {
        d.initialize(j.value("seed", std::uint64_t{0}));
    }
    return d;
}

Json builtin_dictionary_json(bool with_square, bool with_sin) {
    return {{"kind", "builtin"}, {"name", "example_poly"}, {"with_square", with_square}, {"with_sin", with_sin}};
}

LoadedDictionary load_dictionary(const Json& j) {
    LoadedDictionary out;
    out.descriptor = j;
    const std::string kind = j.value("kind", std::string());
    if (kind == "builtin") {
        if (j.value("name", std::string()) != "example_poly")
            throw ParseError("unknown builtin dictionary '" + j.value("name", std::string()) + "'");
        out.normal = dictionaries::example_poly(j.value("with_square", true), j.value("with_sin", true));
        return out;
    }
    if (kind == "parametric") {
        out.parametric = parametric_from_json(j);
        out.normal = out.parametric->as_normal();
        return out;
    }
    throw ParseError("dictionary JSON needs kind 'builtin' or 'parametric'");
}

Json consistency_to_json(const ConsistencyReport& r) {
    return {{"index", r.index},
            {"sqrt_index", r.sqrt_index},
            {"trace_lower", r.trace_lower},
            {"trace_upper", r.trace_upper},
            {"worst_coeffs", vector_to_json(r.worst_coeffs)},
            {"rank_flags",
             {{"row_rank_ok_X", r.rank_report.row_rank_ok_X},
              {"row_rank_ok_Xplus", r.rank_report.row_rank_ok_Xplus},
              {"min_singular_values", {r.rank_report.min_singular_X, r.rank_report.min_singular_Xplus}}}},
            {"pre_clamp_max", r.pre_clamp_max},
            {"pre_clamp_min", r.pre_clamp_min}};
}

namespace {

Json decoder_to_json(const StateDecoder& d) {
    return {{"D", matrix_to_json(d.D)}, {"training_residual", d.training_residual}, {"fixed_head", d.from_fixed_head}};
}

StateDecoder decoder_from_json(const Json& j) {
    StateDecoder d;
    d.D = matrix_from_json(j.at("D"));
    d.training_residual = j.value("training_residual", 0.0);
    d.from_fixed_head = j.value("fixed_head", false);
    return d;
}

Json parse_descriptor(const std::string& text) {
    if (text.empty()) throw ConfigError("model has no dictionary descriptor; cannot serialize");
    return Json::parse(text);
}

}  // namespace

Json model_to_json(const AnyModel& any) {
    return std::visit(
        [](const auto& m) -> Json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SeparableModel>) {
                return {{"kind", "separable"},
                        {"l", m.l()},
                        {"s", m.s()},
                        {"A11", matrix_to_json(m.A11)},
                        {"A12", matrix_to_json(m.A12)},
                        {"A21", matrix_to_json(m.A21)},
                        {"A22", matrix_to_json(m.A22)},
                        {"source_index", m.source_index},
                        {"decoder", decoder_to_json(m.decoder)},
                        {"gtilde_descriptor", "dictionary"},
                        {"dictionary", parse_descriptor(m.dictionary_descriptor)}};
            } else if constexpr (std::is_same_v<T, LinearLiftedModel>) {
                return {{"kind", "linear"},
                        {"A", matrix_to_json(m.A)},
                        {"B", matrix_to_json(m.B)},
                        {"advisory", m.advisory},
                        {"residual", m.residual},
                        {"decoder", decoder_to_json(m.decoder)},
                        {"dictionary", parse_descriptor(m.dictionary_descriptor)}};
            } else {
                Json bs = Json::array();
                for (const auto& b : m.B) bs.push_back(matrix_to_json(b));
                Json j{{"kind", "bilinear"},
                       {"A", matrix_to_json(m.A)},
                       {"B", bs},
                       {"advisory", m.advisory},
                       {"residual", m.residual},
                       {"decoder", decoder_to_json(m.decoder)},
                       {"dictionary", parse_descriptor(m.dictionary_descriptor)}};
                if (m.C) j["C"] = matrix_to_json(*m.C);
                return j;
            }
        },
        any);
}

AnyModel model_from_json(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const LoadedDictionary dict = load_dictionary(j.at("dictionary"));
    const std::string desc = j.at("dictionary").dump();
    if (kind == "separable") {
        SeparableModel m;
        m.H = dict.normal.H;
        m.Gtilde = dict.normal.Gtilde;
        m.A11 = matrix_from_json(j.at("A11"));
        m.A12 = matrix_from_json(j.at("A12"));
        m.A21 = matrix_from_json(j.at("A21"));
        m.A22 = matrix_from_json(j.at("A22"));
        if (m.A12.rows() == 0) m.A12.resize(m.A11.rows(), 0);
        m.source_index = j.value("source_index", 0.0);
        m.decoder = decoder_from_json(j.at("decoder"));
        m.dictionary_descriptor = desc;
        if (m.A11.rows() != dict.normal.l() || m.s() != dict.normal.s())
            throw ParseError("separable model blocks do not match its dictionary");
        return m;
    }
    if (kind == "linear") {
        LinearLiftedModel m;
        m.psi = dict.normal.H;
        m.A = matrix_from_json(j.at("A"));
        m.B = matrix_from_json(j.at("B"));
        m.advisory = j.value("advisory", false);
        m.residual = j.value("residual", 0.0);
        m.decoder = decoder_from_json(j.at("decoder"));
        m.dictionary_descriptor = desc;
        return m;
    }
    if (kind == "bilinear") {
        BilinearLiftedModel m;
        m.psi = dict.normal.H;
        m.A = matrix_from_json(j.at("A"));
        for (const auto& b : j.at("B")) m.B.push_back(matrix_from_json(b));
        if (j.contains("C")) m.C = matrix_from_json(j["C"]);
        m.advisory = j.value("advisory", false);
        m.residual = j.value("residual", 0.0);
        m.decoder = decoder_from_json(j.at("decoder"));
        m.dictionary_descriptor = desc;
        return m;
    }
    throw ParseError("unknown model kind '" + kind + "'");
}

Json train_config_to_json(const TrainConfig& c) {
    Json head = Json::array();
    for (int i : c.fixed_head) head.push_back("x" + std::to_string(i + 1));
    return {{"family", family_to_json(c.family)},
            {"s", c.s},
            {"l", c.l},
            {"fixed_head", head},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr_start", c.lr_start},
            {"lr_end", c.lr_end},
            {"seed", c.seed},
            {"loss_mode", to_string(c.loss_mode)},
            {"x_scale", c.x_scale},
            {"u_scale", c.u_scale},
            {"train_fraction", c.train_fraction},
            {"ridge", c.ridge}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    if (j.contains("family")) c.family = family_from_json(j["family"]);
    c.s = j.value("s", c.s);
    c.l = j.value("l", c.l);
    if (j.contains("fixed_head")) {
        c.fixed_head.clear();
        for (const auto& tag : j["fixed_head"]) {
            if (tag.is_number_integer()) c.fixed_head.push_back(tag.get<int>());
            else c.fixed_head.push_back(std::stoi(tag.get<std::string>().substr(1)) - 1);
        }
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_start = j.value("lr_start", c.lr_start);
    c.lr_end = j.value("lr_end", c.lr_end);
    c.seed = j.value("seed", c.seed);
    c.loss_mode = parse_loss_mode(j.value("loss_mode", std::string("trace")));
    c.x_scale = j.value("x_scale", std::vector<double>{});
    c.u_scale = j.value("u_scale", std::vector<double>{});
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.ridge = j.value("ridge", c.ridge);
    return c;
}

Json train_report_to_json(const TrainReport& r) {
    return {{"best_epoch", r.best_epoch},
            {"final_train_proximity", r.final_train_proximity},
            {"final_test_proximity", r.final_test_proximity},
            {"nonfinite_batches", r.nonfinite_batches},
            {"rejected_experiments", r.rejected_experiments},
            {"aborted", r.aborted},
            {"abort_reason", r.abort_reason},
            {"epochs", r.epochs.size()}};
}

std::string train_report_csv(const TrainReport& r) {
    std::ostringstream out;
    out << "epoch,lr,train_loss,val_loss,val_proximity\n";
    char buf[160];
    for (const auto& e : r.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss, e.val_loss,
                      e.val_proximity);
        out << buf;
    }
    return out.str();
}

Json snapshot_manifest(const SnapshotSet& ss) {
    return {{"n", ss.state_dim()},
            {"m", ss.input_dim()},
            {"N", ss.size()},
            {"seed", ss.seed},
            {"system_name", ss.system_name},
            {"dt", ss.dt},
            {"rejected_experiments", ss.rejected_experiments}};
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << text;
}

}  // namespace kcf::io
