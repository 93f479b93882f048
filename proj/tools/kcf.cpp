// kcf: data generation, EDMD, consistency, dictionary learning, extraction,
// prediction and model comparison.
//
// Exit codes: 0 ok, 2 usage/config, 3 simulation failure, 4 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kcf/dynamics.hpp"
#include "kcf/edmd.hpp"
#include "kcf/errors.hpp"
#include "kcf/kernels.hpp"
#include "kcf/learning.hpp"
#include "kcf/separable.hpp"
#include "kcf/serialize.hpp"

namespace fs = std::filesystem;
using namespace kcf;
using Json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kSimulation = 3, kNumerical = 4 };

struct Common {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out = ".";
    double tol = 1e-8;
    Json config = Json::object();

    void add_to(CLI::App* app) {
        app->add_option("--seed", seed, "random seed");
        app->add_option("--config", config_path, "JSON file with defaults for this command")->check(CLI::ExistingFile);
        app->add_option("--out", out, "output directory");
        app->add_option("--tol", tol, "numerical tolerance");
    }

    void load() {
        if (!config_path.empty()) config = io::read_json_file(config_path);
        if (!config.is_object()) throw ConfigError("--config must hold a JSON object");
        fs::create_directories(out);
    }

    std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }
};

// Command-line value when given, else the config entry, else the default.
template <class T>
T pick(const CLI::App* app, const std::string& flag, const T& cli, const Json& config, const std::string& key) {
    if (app->get_option(flag)->count() > 0) return cli;
    if (config.contains(key)) return config.at(key).get<T>();
    return cli;
}

std::string csv_comment(const Json& prov) {
    return "tool_version=" + prov.at("tool_version").get<std::string>() +
           " seed=" + std::to_string(prov.at("seed").get<std::uint64_t>()) +
           " config_hash=" + prov.at("config_hash").get<std::string>();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Vector parse_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (tok.empty() || end != tok.c_str() + tok.size()) throw ConfigError("bad number '" + tok + "' in '" + text + "'");
        vals.push_back(v);
    }
    if (vals.empty()) throw ConfigError("empty vector '" + text + "'");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// One input vector per non-comment line, comma separated; an optional header starts with 'u'.
std::vector<Vector> read_inputs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<Vector> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line[0] == 'u') continue;
        try {
            out.push_back(parse_vector(line));
        } catch (const ConfigError& e) {
            throw ParseError(path + ": line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

Json dictionary_json_or_builtin(const std::string& path) {
    return path.empty() ? io::builtin_dictionary_json() : io::read_json_file(path);
}

std::vector<Vector> default_x0s(const ControlSystem& sys) {
    if (sys.name.rfind("dc_motor", 0) == 0) return {(Vector(2) << 0, -125).finished(), (Vector(2) << 0, 125).finished()};
    return {(Vector(2) << 0.5, -0.5).finished(), (Vector(2) << -1, 1).finished()};
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string system;
    int experiments = 100;
    int steps = 10;
    std::string input_mode = "constant";
    int hold = 1;
};

int cmd_simulate(const CLI::App* app, Common& c, const SimulateArgs& a) {
    c.load();
    Json cfg{{"system", pick(app, "--system", a.system, c.config, "system")},
             {"experiments", pick(app, "--experiments", a.experiments, c.config, "experiments")},
             {"steps", pick(app, "--steps", a.steps, c.config, "steps")},
             {"input_mode", pick(app, "--input-mode", a.input_mode, c.config, "input_mode")},
             {"hold", pick(app, "--hold", a.hold, c.config, "hold")},
             {"seed", pick(app, "--seed", c.seed, c.config, "seed")}};
    if (cfg["system"].get<std::string>().empty()) throw ConfigError("simulate needs --system");
    const ControlSystem sys = systems::by_name(cfg["system"]);
    ExperimentPlan plan;
    plan.num_experiments = cfg["experiments"];
    plan.steps_per_experiment = cfg["steps"];
    plan.seed = cfg["seed"];
    plan.hold_steps = cfg["hold"];
    const std::string mode = cfg["input_mode"];
    if (mode == "constant") plan.input_mode = InputMode::ConstantPerExperiment;
    else if (mode == "piecewise") plan.input_mode = InputMode::PiecewiseConstant;
    else throw ConfigError("input_mode must be constant or piecewise");
    if (plan.num_experiments < 1 || plan.steps_per_experiment < 1 || plan.hold_steps < 1)
        throw ConfigError("experiments, steps and hold must be positive");

    const SnapshotSet ss = run_experiments(sys, plan);
    if (ss.size() == 0) throw NonFiniteState(0, 0);
    const Json prov = io::provenance(plan.seed, cfg);
    io::write_snapshots_csv(ss, c.path("snapshots.csv"), csv_comment(prov));
    Json manifest = io::snapshot_manifest(ss);
    manifest["provenance"] = prov;
    manifest["config"] = cfg;
    io::write_json_file(c.path("snapshots.json"), manifest);
    std::cout << "wrote " << ss.size() << " snapshots of " << sys.name << " to " << c.path("snapshots.csv");
    if (ss.rejected_experiments) std::cout << " (" << ss.rejected_experiments << " experiments rejected)";
    std::cout << "\n";
    return kOk;
}

struct DataArgs {
    std::string data;
    std::string dictionary;
};

struct Loaded {
    SnapshotSet ss;
    AugmentedSnapshots aug;
    io::LoadedDictionary dict;
};

Loaded load_data(const CLI::App* app, Common& c, const DataArgs& a, Json& cfg) {
    c.load();
    cfg["data"] = pick(app, "--data", a.data, c.config, "data");
    cfg["dictionary"] = pick(app, "--dictionary", a.dictionary, c.config, "dictionary");
    if (cfg["data"].get<std::string>().empty()) throw ConfigError("--data is required");
    Loaded l;
    l.ss = io::read_snapshots_csv(cfg["data"]);
    if (l.ss.size() == 0) throw ConfigError(cfg["data"].get<std::string>() + " holds no snapshots");
    l.aug = to_augmented(l.ss);
    const Json dj = dictionary_json_or_builtin(cfg["dictionary"]);
    cfg["dictionary_descriptor"] = dj;
    l.dict = io::load_dictionary(dj);
    if (l.dict.normal.state_dim() != l.ss.state_dim() || l.dict.normal.input_dim() != l.ss.input_dim())
        throw DimensionMismatch("dictionary expects n=" + std::to_string(l.dict.normal.state_dim()) + ", m=" +
                                std::to_string(l.dict.normal.input_dim()) + " but the data has n=" +
                                std::to_string(l.ss.state_dim()) + ", m=" + std::to_string(l.ss.input_dim()));
    return l;
}

int cmd_edmd(const CLI::App* app, Common& c, const DataArgs& a) {
    Json cfg;
    const Loaded l = load_data(app, c, a, cfg);
    cfg["seed"] = pick(app, "--seed", c.seed, c.config, "seed");
    const Matrix Phi = l.dict.normal.eval_matrix(l.aug.Z), PhiPlus = l.dict.normal.eval_matrix(l.aug.Zplus);
    const EdmdFit fit = fit_edmd(Phi, PhiPlus);
    const ProjectionResidual res = projection_residual(fit, Phi, PhiPlus);
    Json out{{"K", io::matrix_to_json(fit.K)},
             {"rank_flags",
              {{"row_rank_ok_X", fit.rank_report.row_rank_ok_X},
               {"row_rank_ok_Xplus", fit.rank_report.row_rank_ok_Xplus},
               {"min_singular_values", {fit.rank_report.min_singular_X, fit.rank_report.min_singular_Xplus}}}},
             {"advisory", !fit.rank_report.full_rank()},
             {"residual_frobenius", res.frobenius},
             {"provenance", io::provenance(cfg["seed"], cfg)}};
    io::write_json_file(c.path("edmd.json"), out);
    if (!fit.rank_report.full_rank()) std::cerr << "warning: dictionary data is not full row rank\n";
    std::cout << "K is " << fit.K.rows() << "x" << fit.K.cols() << ", residual " << res.frobenius << "\n";
    return kOk;
}

int cmd_consistency(const CLI::App* app, Common& c, const DataArgs& a) {
    Json cfg;
    const Loaded l = load_data(app, c, a, cfg);
    cfg["seed"] = pick(app, "--seed", c.seed, c.config, "seed");
    cfg["tol"] = pick(app, "--tol", c.tol, c.config, "tol");
    const ConsistencyReport rep = invariance_proximity(l.dict.normal, l.aug);
    Json out = io::consistency_to_json(rep);
    out["invariant_within_tol"] = rep.index <= cfg["tol"].get<double>();
    out["provenance"] = io::provenance(cfg["seed"], cfg);
    io::write_json_file(c.path("consistency.json"), out);
    std::cout << "consistency index " << rep.index << ", invariance proximity " << rep.sqrt_index << "\n";
    return kOk;
}

struct LearnArgs {
    std::string data;
    int epochs = -1;
};

int cmd_learn(const CLI::App* app, Common& c, const LearnArgs& a) {
    c.load();
    const std::string data = pick(app, "--data", a.data, c.config, "data");
    if (data.empty()) throw ConfigError("--data is required");
    TrainConfig tc = io::train_config_from_json(c.config.value("train", c.config));
    if (app->get_option("--seed")->count()) tc.seed = c.seed;
    if (a.epochs >= 0) tc.epochs = a.epochs;
    const SnapshotSet ss = io::read_snapshots_csv(data);
    const AugmentedSnapshots aug = to_augmented(ss);
    Json cfg{{"data", data}, {"train", io::train_config_to_json(tc)}};
    const Json prov = io::provenance(tc.seed, cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const PipelineResult r = pipeline(tc, aug);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto with_prov = [&](Json j) {
        j["provenance"] = prov;
        return j;
    };
    const Json dict = io::dictionary_to_json(r.dictionary);
    const Json lin_dict = io::dictionary_to_json(r.linear_dictionary);
    const Json bil_dict = io::dictionary_to_json(r.bilinear_dictionary);
    io::write_json_file(c.path("dictionary.json"), with_prov(dict));
    io::write_json_file(c.path("linear_dictionary.json"), with_prov(lin_dict));
    io::write_json_file(c.path("bilinear_dictionary.json"), with_prov(bil_dict));

    SeparableModel sep = r.separable;
    sep.dictionary_descriptor = dict.dump();
    LinearLiftedModel lin = r.linear;
    lin.dictionary_descriptor = lin_dict.dump();
    BilinearLiftedModel bil = r.bilinear;
    bil.dictionary_descriptor = bil_dict.dump();
    io::write_json_file(c.path("separable.json"), with_prov(io::model_to_json(sep)));
    io::write_json_file(c.path("linear.json"), with_prov(io::model_to_json(lin)));
    io::write_json_file(c.path("bilinear.json"), with_prov(io::model_to_json(bil)));

    Json report = io::train_report_to_json(r.report);
    report["train_consistency"] = io::consistency_to_json(r.train_consistency);
    report["test_consistency"] = io::consistency_to_json(r.test_consistency);
    report["linear"] = io::train_report_to_json(r.linear_report);
    report["bilinear"] = io::train_report_to_json(r.bilinear_report);
    report["config"] = cfg;
    io::write_json_file(c.path("train_report.json"), with_prov(report));
    io::write_text_file(c.path("train_epochs.csv"), "# " + csv_comment(prov) + "\n" + io::train_report_csv(r.report));

    std::cout << "trained " << r.report.epochs.size() << " epochs in " << secs << " s; invariance proximity train "
              << r.report.final_train_proximity << ", test " << r.report.final_test_proximity << "\n";
    if (r.report.aborted || r.linear_report.aborted || r.bilinear_report.aborted) {
        std::cerr << "error: training aborted: " << r.report.abort_reason << r.linear_report.abort_reason
                  << r.bilinear_report.abort_reason << "\n";
        return kNumerical;
    }
    return kOk;
}

struct ExtractArgs {
    DataArgs data;
    bool baselines = false;
};

int cmd_extract(const CLI::App* app, Common& c, const ExtractArgs& a) {
    Json cfg;
    const Loaded l = load_data(app, c, a.data, cfg);
    cfg["seed"] = pick(app, "--seed", c.seed, c.config, "seed");
    cfg["baselines"] = a.baselines;
    const Json prov = io::provenance(cfg["seed"], cfg);
    const FixedPipelineResult r = pipeline_fixed(l.dict.normal, l.aug);
    const std::string desc = cfg["dictionary_descriptor"].dump();
    auto write_model = [&](const std::string& name, AnyModel m) {
        std::visit([&](auto& x) { x.dictionary_descriptor = desc; }, m);
        Json j = io::model_to_json(m);
        j["provenance"] = prov;
        io::write_json_file(c.path(name), j);
    };
    write_model("separable.json", r.separable);
    if (a.baselines) {
        write_model("linear.json", r.linear);
        write_model("bilinear.json", r.bilinear);
    }
    std::cout << "separable model l=" << r.separable.l() << ", s=" << r.separable.s() << ", source index "
              << r.separable.source_index << "\n";
    return kOk;
}

struct PredictArgs {
    std::string model;
    std::string x0;
    std::string inputs;
};

int cmd_predict(const CLI::App* app, Common& c, const PredictArgs& a) {
    c.load();
    const std::string model_path = pick(app, "--model", a.model, c.config, "model");
    const std::string x0s = pick(app, "--x0", a.x0, c.config, "x0");
    const std::string inputs_path = pick(app, "--inputs", a.inputs, c.config, "inputs");
    if (model_path.empty() || x0s.empty() || inputs_path.empty()) throw ConfigError("predict needs --model, --x0 and --inputs");
    const AnyModel model = io::model_from_json(io::read_json_file(model_path));
    const Vector x0 = parse_vector(x0s);
    const std::vector<Vector> inputs = read_inputs_csv(inputs_path);
    if (inputs.empty()) throw ConfigError(inputs_path + " holds no inputs");
    const Matrix states = rollout_states(model, x0, inputs);

    Json cfg{{"model", model_path}, {"x0", x0s}, {"inputs", inputs_path}, {"seed", pick(app, "--seed", c.seed, c.config, "seed")}};
    std::ostringstream csv;
    csv << "# " << csv_comment(io::provenance(cfg["seed"], cfg)) << "\nk";
    for (Eigen::Index i = 0; i < states.rows(); ++i) csv << ",x" << i + 1;
    csv << "\n";
    for (Eigen::Index k = 0; k < states.cols(); ++k) {
        csv << k;
        for (Eigen::Index i = 0; i < states.rows(); ++i) csv << "," << num(states(i, k));
        csv << "\n";
    }
    io::write_text_file(c.path("prediction.csv"), csv.str());
    std::cout << "predicted " << inputs.size() << " steps with a " << model_kind(model) << " model\n";
    return kOk;
}

struct CompareArgs {
    std::string system;
    std::vector<std::string> models;
    int steps = 600;
    std::uint64_t input_seed = 2024;
    std::vector<std::string> x0;
};

int cmd_compare(const CLI::App* app, Common& c, const CompareArgs& a) {
    c.load();
    Json cfg{{"system", pick(app, "--system", a.system, c.config, "system")},
             {"models", pick(app, "--models", a.models, c.config, "models")},
             {"steps", pick(app, "--steps", a.steps, c.config, "steps")},
             {"input_seed", pick(app, "--input-seed", a.input_seed, c.config, "input_seed")},
             {"x0", pick(app, "--x0", a.x0, c.config, "x0")},
             {"seed", pick(app, "--seed", c.seed, c.config, "seed")}};
    const auto model_paths = cfg["models"].get<std::vector<std::string>>();
    if (model_paths.size() < 2) throw ConfigError("compare needs at least two --models");
    if (cfg["system"].get<std::string>().empty()) throw ConfigError("compare needs --system");
    const ControlSystem sys = systems::by_name(cfg["system"]);
    if (cfg["steps"].get<int>() < 1) throw ConfigError("--steps must be positive");

    std::vector<std::pair<std::string, AnyModel>> models;
    for (const auto& p : model_paths) {
        std::string name = fs::path(p).stem().string();
        for (const auto& [existing, m] : models)
            if (existing == name) name += "_" + std::to_string(models.size());
        models.emplace_back(name, io::model_from_json(io::read_json_file(p)));
    }
    std::vector<Vector> x0s;
    for (const auto& s : cfg["x0"].get<std::vector<std::string>>()) x0s.push_back(parse_vector(s));
    if (x0s.empty()) x0s = default_x0s(sys);
    const std::vector<Vector> inputs = comparison_inputs(sys, cfg["steps"], cfg["input_seed"]);
    const Comparison cmp = compare_models(sys, models, x0s, inputs);

    const Json prov = io::provenance(cfg["seed"], cfg);
    const std::string comment = "# " + csv_comment(prov) + "\n";
    Json table = Json::array();
    std::ostringstream rm;
    rm << comment << "model";
    for (int i = 0; i < sys.state_dim; ++i) rm << ",rmse_x" << i + 1;
    rm << "\n";
    for (const auto& row : cmp.rows) {
        Json r{{"model", row.model}};
        Json per = Json::array();
        rm << row.model;
        for (double v : row.rmse) {
            per.push_back(std::isfinite(v) ? Json(v) : Json("inf"));
            rm << "," << num(v);
        }
        rm << "\n";
        r["rmse"] = per;
        table.push_back(r);
    }
    Json x0j = Json::array();
    for (const auto& x : x0s) x0j.push_back(io::vector_to_json(x));
    io::write_json_file(c.path("rmse.json"), {{"system", sys.name},
                                             {"steps", inputs.size()},
                                             {"x0", x0j},
                                             {"rmse", table},
                                             {"pooled_over_initial_conditions", true},
                                             {"provenance", prov}});
    io::write_text_file(c.path("rmse.csv"), rm.str());

    std::ostringstream tr;
    tr << comment << "x0_index,k,t";
    for (int j = 0; j < sys.input_dim; ++j) tr << ",u" << j + 1;
    for (int i = 0; i < sys.state_dim; ++i) tr << ",truth_x" << i + 1;
    for (const auto& [name, m] : models)
        for (int i = 0; i < sys.state_dim; ++i) tr << "," << name << "_x" << i + 1;
    tr << "\n";
    const double dt = sys.dt > 0 ? sys.dt : 1.0;
    for (std::size_t e = 0; e < x0s.size(); ++e) {
        for (Eigen::Index k = 0; k < cmp.truth[e].cols(); ++k) {
            tr << e << "," << k << "," << num(static_cast<double>(k) * dt);
            for (int j = 0; j < sys.input_dim; ++j)
                tr << "," << (k < static_cast<Eigen::Index>(inputs.size()) ? num(inputs[static_cast<std::size_t>(k)](j)) : "");
            for (int i = 0; i < sys.state_dim; ++i) tr << "," << num(cmp.truth[e](i, k));
            for (std::size_t mi = 0; mi < models.size(); ++mi)
                for (int i = 0; i < sys.state_dim; ++i) tr << "," << num(cmp.predictions[mi][e](i, k));
            tr << "\n";
        }
    }
    io::write_text_file(c.path("trajectories.csv"), tr.str());

    for (const auto& row : cmp.rows) {
        std::cout << row.model;
        for (double v : row.rmse) std::cout << " " << v;
        std::cout << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman control family models: simulate, fit, learn, extract, predict, compare"};
    app.require_subcommand(1);
    std::string simd;
    app.add_option("--simd", simd, "kernel variant: scalar, avx2, neon");

    Common common;
    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a snapshot dataset from a builtin system");
    common.add_to(s);
    s->add_option("--system", sim.system, "builtin system name");
    s->add_option("--experiments", sim.experiments, "number of experiments");
    s->add_option("--steps", sim.steps, "steps per experiment");
    s->add_option("--input-mode", sim.input_mode, "constant or piecewise");
    s->add_option("--hold", sim.hold, "hold length for piecewise inputs");

    DataArgs edmd_args, cons_args;
    auto* e = app.add_subcommand("edmd", "fit K = Psi(X+) Psi(X)^+ on a dataset");
    common.add_to(e);
    e->add_option("--data", edmd_args.data, "snapshot CSV");
    e->add_option("--dictionary", edmd_args.dictionary, "dictionary JSON (default: builtin example_poly)");

    auto* cs = app.add_subcommand("consistency", "consistency index and invariance proximity");
    common.add_to(cs);
    cs->add_option("--data", cons_args.data, "snapshot CSV");
    cs->add_option("--dictionary", cons_args.dictionary, "dictionary JSON (default: builtin example_poly)");

    LearnArgs learn;
    auto* l = app.add_subcommand("learn", "learn a normal-form dictionary and the baselines");
    common.add_to(l);
    l->add_option("--data", learn.data, "snapshot CSV");
    l->add_option("--epochs", learn.epochs, "override the configured epoch count");

    ExtractArgs ext;
    auto* x = app.add_subcommand("extract", "separable model from a fixed dictionary");
    common.add_to(x);
    x->add_option("--data", ext.data.data, "snapshot CSV");
    x->add_option("--dictionary", ext.data.dictionary, "dictionary JSON (default: builtin example_poly)");
    x->add_flag("--baselines", ext.baselines, "also fit linear and bilinear models on the dictionary's H");

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "open-loop rollout of a saved model");
    common.add_to(p);
    p->add_option("--model", pred.model, "model JSON");
    p->add_option("--x0", pred.x0, "initial state, comma separated");
    p->add_option("--inputs", pred.inputs, "CSV with one input vector per line");

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "rollout RMSE of several models against the true system");
    common.add_to(c);
    c->add_option("--system", cmp.system, "builtin system name");
    c->add_option("--models", cmp.models, "model JSON files");
    c->add_option("--steps", cmp.steps, "length of the test input");
    c->add_option("--input-seed", cmp.input_seed, "seed of the piecewise-constant test input");
    c->add_option("--x0", cmp.x0, "initial states, each comma separated");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (!simd.empty()) simd::select(simd::parse_isa(simd));
        if (s->parsed()) return cmd_simulate(s, common, sim);
        if (e->parsed()) return cmd_edmd(e, common, edmd_args);
        if (cs->parsed()) return cmd_consistency(cs, common, cons_args);
        if (l->parsed()) return cmd_learn(l, common, learn);
        if (x->parsed()) return cmd_extract(x, common, ext);
        if (p->parsed()) return cmd_predict(p, common, pred);
        if (c->parsed()) return cmd_compare(c, common, cmp);
    } catch (const NonFiniteState& err) {
        std::cerr << "simulation failure: " << err.what() << "\n";
        return kSimulation;
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kUsage;
    } catch (const ParseError& err) {
        std::cerr << "parse error: " << err.what() << "\n";
        return kUsage;
    } catch (const DimensionMismatch& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kUsage;
    } catch (const UnknownInputValue& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kUsage;
    } catch (const Error& err) {
        std::cerr << "numerical failure: " << err.what() << "\n";
        return kNumerical;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kUsage;
    } catch (const std::filesystem::filesystem_error& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
