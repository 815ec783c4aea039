#include "cosparse/benchmark.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

#include "cosparse/errors.hpp"
#include "cosparse/metrics.hpp"
#include "serde.hpp"

namespace cosparse {

const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::simple: return "simple";
        case ModelKind::distinctive: return "distinctive";
        case ModelKind::disaggregating: return "disaggregating";
        case ModelKind::synthesis: return "synthesis";
    }
    return "simple";
}

ModelKind model_from_name(const std::string& name) {
    if (name == "simple") return ModelKind::simple;
    if (name == "distinctive") return ModelKind::distinctive;
    if (name == "disaggregating") return ModelKind::disaggregating;
    if (name == "synthesis") return ModelKind::synthesis;
    throw ConfigError("unknown model '" + name +
                      "' (valid: simple, distinctive, disaggregating, synthesis)");
}

void validate(const BenchmarkConfig& cfg) {
    auto bad = [](const std::string& what) {
        throw ConfigError("benchmark config field '" + what + "' is invalid");
    };
    if (cfg.fractions.empty()) bad("fractions");
    std::set<double> seen_f;
    for (double f : cfg.fractions) {
        if (!std::isfinite(f) || f <= 0.0 || f >= 1.0) bad("fractions");
        if (!seen_f.insert(f).second)
            throw ConfigError("benchmark config field 'fractions' repeats a value");
    }
    if (cfg.models.empty()) bad("models");
    std::set<ModelKind> seen_m;
    for (ModelKind m : cfg.models)
        if (!seen_m.insert(m).second)
            throw ConfigError("benchmark config field 'models' repeats a value");
    if (cfg.replications < 1) bad("replications");
    if (cfg.threads < 0) bad("threads");
    validate(cfg.train);
    validate(cfg.disagg);
    validate(cfg.synthesis);
}

std::uint64_t benchmark_cell_seed(std::uint64_t base, std::size_t fraction_index,
                                  int replication) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(fraction_index) + 1) +
                      0xBF58476D1CE4E5B9ULL * (static_cast<std::uint64_t>(replication) + 1);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

namespace {

void run_cell(const HouseDataset& ds, const BenchmarkConfig& cfg, BenchmarkCell& cell) {
    try {
        const std::uint64_t cs =
            benchmark_cell_seed(cfg.seed, static_cast<std::size_t>(cell.fraction_index),
                                cell.replication);
        auto [tr, te] = split_training_mode(ds, cell.fraction, cs);
        std::vector<Matrix> xs, truth;
        std::vector<std::string> labels;
        for (const DayMatrix& a : tr.appliances) {
            xs.push_back(a.values);
            labels.push_back(a.channel_id);
        }
        for (const DayMatrix& a : te.appliances) truth.push_back(a.values);

        std::vector<Matrix> est;
        if (cell.model == ModelKind::synthesis) {
            SynthesisControls sc = cfg.synthesis;
            sc.seed = cs;
            TrainArtifacts art = train_synthesis_set(xs, sc, labels);
            std::vector<SynthesisDict> sd;
            for (const AnalysisDict& d : art.dicts) sd.push_back({d.appliance_id, d.op});
            est = disaggregate_synthesis(te.aggregate.values, sd, sc.lambda).estimates;
        } else {
            Hyperparams th = cfg.train;
            th.seed = cs;
            TrainArtifacts art = cell.model == ModelKind::simple
                                     ? train_simple_set(xs, th, labels)
                                 : cell.model == ModelKind::distinctive
                                     ? train_distinctive(xs, th, labels)
                                     : train_disaggregating(xs, th, labels);
            est = disaggregate(te.aggregate.values, art.dicts, cfg.disagg, cfg.disagg_options)
                      .estimates;
        }

        cell.accuracy = disaggregation_accuracy(est, truth, te.aggregate.values);
        cell.normalized_error.clear();
        for (std::size_t i = 0; i < est.size(); ++i)
            cell.normalized_error.push_back(normalized_error(est[i], truth[i]));
        cell.ok = true;
    } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.category() + ": " + e.what();
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = std::string("internal: ") + e.what();
    }
}

}  // namespace

BenchmarkResult run_benchmark(const HouseDataset& ds, const BenchmarkConfig& cfg) {
    validate(cfg);
    if (ds.appliances.empty())
        throw EmptyData("run_benchmark: dataset has no appliance channels");

    BenchmarkResult res;
    for (const DayMatrix& a : ds.appliances) res.appliances.push_back(a.channel_id);
    res.cells.reserve(cfg.fractions.size() * cfg.models.size() *
                      static_cast<std::size_t>(cfg.replications));
    for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi)
        for (ModelKind m : cfg.models)
            for (int rep = 0; rep < cfg.replications; ++rep) {
                BenchmarkCell cell;
                cell.fraction = cfg.fractions[fi];
                cell.fraction_index = static_cast<int>(fi);
                cell.model = m;
                cell.replication = rep;
                res.cells.push_back(std::move(cell));
            }

    const std::size_t total = res.cells.size();
    std::size_t workers = cfg.threads == 0
                              ? std::max(1u, std::thread::hardware_concurrency())
                              : static_cast<std::size_t>(cfg.threads);
    workers = std::min(workers, total);

    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < total;)
            run_cell(ds, cfg, res.cells[i]);
    };
    if (workers <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
        for (std::thread& t : pool) t.join();
    }

    for (const BenchmarkCell& c : res.cells)
        if (!c.ok) ++res.failed;
    return res;
}

void write_benchmark_csv(const std::string& path, const BenchmarkResult& res) {
    std::ofstream out = serde::open_out(path);
    out << "fraction,model,replication,ok,accuracy";
    for (const std::string& label : res.appliances)
        out << ',' << serde::csv_safe(label) << "_normalized_error";
    out << ",error\n";
    for (const BenchmarkCell& c : res.cells) {
        out << serde::nine_digits(c.fraction) << ',' << model_name(c.model) << ','
            << c.replication << ',' << (c.ok ? 1 : 0) << ',';
        if (c.ok) out << serde::nine_digits(c.accuracy);
        for (std::size_t i = 0; i < res.appliances.size(); ++i) {
            out << ',';
            if (c.ok && i < c.normalized_error.size())
                out << serde::nine_digits(c.normalized_error[i]);
        }
        out << ',' << (c.ok ? std::string() : serde::csv_safe(c.error)) << '\n';
    }
}

namespace {

// Cells of one (fraction, model) group, keyed for deterministic iteration in
// sweep order.
struct GroupKey {
    int fraction_index;
    int model;
    bool operator<(const GroupKey& o) const {
        return fraction_index != o.fraction_index ? fraction_index < o.fraction_index
                                                  : model < o.model;
    }
};

std::map<GroupKey, std::vector<const BenchmarkCell*>> group_cells(const BenchmarkResult& res) {
    std::map<GroupKey, std::vector<const BenchmarkCell*>> groups;
    for (const BenchmarkCell& c : res.cells)
        groups[{c.fraction_index, static_cast<int>(c.model)}].push_back(&c);
    return groups;
}

}  // namespace

void write_benchmark_summary_csv(const std::string& path, const BenchmarkResult& res) {
    std::ofstream out = serde::open_out(path);
    out << "fraction,model,cells,ok_cells,mean_accuracy,std_accuracy";
    for (const std::string& label : res.appliances)
        out << ',' << serde::csv_safe(label) << "_mean_normalized_error";
    out << '\n';
    for (const auto& [key, cells] : group_cells(res)) {
        std::vector<double> acc;
        std::vector<double> ne_sum(res.appliances.size(), 0.0);
        for (const BenchmarkCell* c : cells)
            if (c->ok) {
                acc.push_back(c->accuracy);
                for (std::size_t i = 0; i < ne_sum.size() && i < c->normalized_error.size(); ++i)
                    ne_sum[i] += c->normalized_error[i];
            }
        out << serde::nine_digits(cells.front()->fraction) << ','
            << model_name(static_cast<ModelKind>(key.model)) << ',' << cells.size() << ','
            << acc.size();
        if (acc.empty()) {
            out << ",,";
            for (std::size_t i = 0; i < ne_sum.size(); ++i) out << ',';
        } else {
            const SplitSummary s = summarize_splits(acc);
            out << ',' << serde::nine_digits(s.mean) << ',' << serde::nine_digits(s.std);
            for (double v : ne_sum)
                out << ',' << serde::nine_digits(v / static_cast<double>(acc.size()));
        }
        out << '\n';
    }
}

void write_benchmark_ttests_csv(const std::string& path, const BenchmarkResult& res) {
    std::ofstream out = serde::open_out(path);
    out << "fraction,model_a,model_b,pairs,t,df,significant_05,significant_01\n";

    // replication -> accuracy maps per group, plus sweep-order bookkeeping
    std::map<GroupKey, std::map<int, double>> acc;
    std::vector<int> fraction_order;
    std::vector<int> model_order;
    std::map<int, double> fraction_value;
    for (const BenchmarkCell& c : res.cells) {
        if (c.ok) acc[{c.fraction_index, static_cast<int>(c.model)}][c.replication] = c.accuracy;
        if (fraction_value.emplace(c.fraction_index, c.fraction).second)
            fraction_order.push_back(c.fraction_index);
        const int m = static_cast<int>(c.model);
        bool known = false;
        for (int seen : model_order) known = known || seen == m;
        if (!known) model_order.push_back(m);
    }

    for (int fi : fraction_order)
        for (std::size_t i = 0; i < model_order.size(); ++i)
            for (std::size_t j = i + 1; j < model_order.size(); ++j) {
                const auto& ma = acc[{fi, model_order[i]}];
                const auto& mb = acc[{fi, model_order[j]}];
                std::vector<double> a, b;
                for (const auto& [rep, value] : ma) {
                    const auto it = mb.find(rep);
                    if (it != mb.end()) {
                        a.push_back(value);
                        b.push_back(it->second);
                    }
                }
                out << serde::nine_digits(fraction_value[fi]) << ','
                    << model_name(static_cast<ModelKind>(model_order[i])) << ','
                    << model_name(static_cast<ModelKind>(model_order[j])) << ',' << a.size();
                if (a.size() >= 2) {
                    const TTestResult t05 = paired_t_test(a, b, TTestAlpha::a05);
                    const TTestResult t01 = paired_t_test(a, b, TTestAlpha::a01);
                    out << ',' << serde::nine_digits(t05.t) << ',' << t05.df << ','
                        << (t05.significant ? 1 : 0) << ',' << (t01.significant ? 1 : 0);
                } else {
                    out << ",,,,";
                }
                out << '\n';
            }
}

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& scope) {
    for (const auto& item : obj.items())
        if (allowed.count(item.key()) == 0)
            throw ConfigError("benchmark config field '" + scope + item.key() + "' is unknown");
}

void check(bool ok, const std::string& field) {
    if (!ok) throw ConfigError("benchmark config field '" + field + "' has the wrong type");
}

void hyper_overrides(Hyperparams& h, const nlohmann::json& obj, const std::string& scope) {
    check(obj.is_object(), scope.substr(0, scope.size() - 1));
    reject_unknown(obj,
                   {"lambda", "mu", "eta", "gamma", "atoms", "max_outer", "tol", "ls_eps",
                    "seed", "bregman_variant", "incoherence_variant", "b_init"},
                   scope);
    auto num = [&](const char* key, double& slot) {
        if (obj.contains(key)) {
            check(obj.at(key).is_number(), scope + key);
            slot = obj.at(key).get<double>();
        }
    };
    auto integer = [&](const char* key, int& slot) {
        if (obj.contains(key)) {
            check(obj.at(key).is_number_integer(), scope + key);
            slot = obj.at(key).get<int>();
        }
    };
    num("lambda", h.lambda);
    num("mu", h.mu);
    num("eta", h.eta);
    num("gamma", h.gamma);
    integer("atoms", h.atoms);
    integer("max_outer", h.max_outer);
    num("tol", h.tol);
    num("ls_eps", h.ls_eps);
    if (obj.contains("seed")) {
        check(obj.at("seed").is_number_unsigned() || obj.at("seed").is_number_integer(),
              scope + "seed");
        h.seed = obj.at("seed").get<std::uint64_t>();
    }
    if (obj.contains("bregman_variant")) {
        check(obj.at("bregman_variant").is_string(), scope + "bregman_variant");
        h.bregman_variant = serde::enum_from_name<BregmanVariant, ConfigError>(
            obj.at("bregman_variant").get<std::string>(),
            "benchmark config field '" + scope + "bregman_variant'");
    }
    if (obj.contains("incoherence_variant")) {
        check(obj.at("incoherence_variant").is_string(), scope + "incoherence_variant");
        h.incoherence_variant = serde::enum_from_name<IncoherenceVariant, ConfigError>(
            obj.at("incoherence_variant").get<std::string>(),
            "benchmark config field '" + scope + "incoherence_variant'");
    }
    if (obj.contains("b_init")) {
        check(obj.at("b_init").is_string(), scope + "b_init");
        h.b_init = serde::enum_from_name<BregmanInit, ConfigError>(
            obj.at("b_init").get<std::string>(), "benchmark config field '" + scope + "b_init'");
    }
}

}  // namespace

BenchmarkConfig parse_benchmark_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("benchmark config: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("benchmark config must be a JSON object");
    reject_unknown(j,
                   {"fractions", "models", "replications", "seed", "threads", "train", "disagg",
                    "disagg_options", "synthesis"},
                   "");

    BenchmarkConfig cfg;
    if (j.contains("fractions")) {
        check(j["fractions"].is_array(), "fractions");
        cfg.fractions.clear();
        for (const nlohmann::json& v : j["fractions"]) {
            check(v.is_number(), "fractions");
            cfg.fractions.push_back(v.get<double>());
        }
    }
    if (j.contains("models")) {
        check(j["models"].is_array(), "models");
        cfg.models.clear();
        for (const nlohmann::json& v : j["models"]) {
            check(v.is_string(), "models");
            cfg.models.push_back(model_from_name(v.get<std::string>()));
        }
    }
    if (j.contains("replications")) {
        check(j["replications"].is_number_integer(), "replications");
        cfg.replications = j["replications"].get<int>();
    }
    if (j.contains("seed")) {
        check(j["seed"].is_number_unsigned() || j["seed"].is_number_integer(), "seed");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("threads")) {
        check(j["threads"].is_number_integer(), "threads");
        cfg.threads = j["threads"].get<int>();
    }
    if (j.contains("train")) hyper_overrides(cfg.train, j["train"], "train.");
    if (j.contains("disagg")) hyper_overrides(cfg.disagg, j["disagg"], "disagg.");
    if (j.contains("disagg_options")) {
        const nlohmann::json& o = j["disagg_options"];
        check(o.is_object(), "disagg_options");
        reject_unknown(o, {"clip", "bregman_init", "inner_converged", "inner_max", "inner_tol"},
                       "disagg_options.");
        if (o.contains("clip")) {
            check(o.at("clip").is_boolean(), "disagg_options.clip");
            cfg.disagg_options.clip = o.at("clip").get<bool>();
        }
        if (o.contains("bregman_init")) {
            check(o.at("bregman_init").is_string(), "disagg_options.bregman_init");
            cfg.disagg_options.bregman_init = serde::enum_from_name<BregmanInit, ConfigError>(
                o.at("bregman_init").get<std::string>(),
                "benchmark config field 'disagg_options.bregman_init'");
        }
        if (o.contains("inner_converged")) {
            check(o.at("inner_converged").is_boolean(), "disagg_options.inner_converged");
            cfg.disagg_options.inner_converged = o.at("inner_converged").get<bool>();
        }
        if (o.contains("inner_max")) {
            check(o.at("inner_max").is_number_integer(), "disagg_options.inner_max");
            cfg.disagg_options.inner_max = o.at("inner_max").get<int>();
        }
        if (o.contains("inner_tol")) {
            check(o.at("inner_tol").is_number(), "disagg_options.inner_tol");
            cfg.disagg_options.inner_tol = o.at("inner_tol").get<double>();
        }
    }
    if (j.contains("synthesis")) {
        const nlohmann::json& o = j["synthesis"];
        check(o.is_object(), "synthesis");
        reject_unknown(
            o, {"atoms", "lambda", "max_outer", "tol", "code_max", "code_tol", "ls_eps", "seed"},
            "synthesis.");
        auto num = [&](const char* key, double& slot) {
            if (o.contains(key)) {
                check(o.at(key).is_number(), std::string("synthesis.") + key);
                slot = o.at(key).get<double>();
            }
        };
        auto integer = [&](const char* key, int& slot) {
            if (o.contains(key)) {
                check(o.at(key).is_number_integer(), std::string("synthesis.") + key);
                slot = o.at(key).get<int>();
            }
        };
        integer("atoms", cfg.synthesis.atoms);
        num("lambda", cfg.synthesis.lambda);
        integer("max_outer", cfg.synthesis.max_outer);
        num("tol", cfg.synthesis.tol);
        integer("code_max", cfg.synthesis.code_max);
        num("code_tol", cfg.synthesis.code_tol);
        num("ls_eps", cfg.synthesis.ls_eps);
        if (o.contains("seed")) {
            check(o.at("seed").is_number_unsigned() || o.at("seed").is_number_integer(),
                  "synthesis.seed");
            cfg.synthesis.seed = o.at("seed").get<std::uint64_t>();
        }
    }
    validate(cfg);
    return cfg;
}

std::string serialize_benchmark_config(const BenchmarkConfig& cfg) {
    nlohmann::ordered_json j;
    j["fractions"] = cfg.fractions;
    j["models"] = nlohmann::ordered_json::array();
    for (ModelKind m : cfg.models) j["models"].push_back(model_name(m));
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["train"] = serde::hyper_to_json(cfg.train);
    j["disagg"] = serde::hyper_to_json(cfg.disagg);
    nlohmann::ordered_json o;
    o["clip"] = cfg.disagg_options.clip;
    o["bregman_init"] = serde::b_init_name(cfg.disagg_options.bregman_init);
    o["inner_converged"] = cfg.disagg_options.inner_converged;
    o["inner_max"] = cfg.disagg_options.inner_max;
    o["inner_tol"] = cfg.disagg_options.inner_tol;
    j["disagg_options"] = std::move(o);
    nlohmann::ordered_json s;
    s["atoms"] = cfg.synthesis.atoms;
    s["lambda"] = cfg.synthesis.lambda;
    s["max_outer"] = cfg.synthesis.max_outer;
    s["tol"] = cfg.synthesis.tol;
    s["code_max"] = cfg.synthesis.code_max;
    s["code_tol"] = cfg.synthesis.code_tol;
    s["ls_eps"] = cfg.synthesis.ls_eps;
    s["seed"] = cfg.synthesis.seed;
    j["synthesis"] = std::move(s);
    return j.dump(2);
}

}  // namespace cosparse
