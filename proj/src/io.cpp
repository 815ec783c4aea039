#include "cosparse/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "cosparse/errors.hpp"
#include "serde.hpp"

namespace cosparse {

using serde::csv_safe;
using serde::nine_digits;
using serde::open_out;
using serde::parse_double;
using serde::parse_json_file;
using serde::split_fields;

void write_day_matrix_csv(const std::string& path, const DayMatrix& m) {
    if (m.values.cols() != static_cast<Eigen::Index>(m.day_labels.size()))
        throw InvalidArgument("day matrix '" + m.channel_id + "': label count != columns");
    std::ofstream out = open_out(path);
    out << "slot";
    for (const std::string& label : m.day_labels) out << ',' << csv_safe(label);
    out << '\n';
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        out << r;
        for (Eigen::Index c = 0; c < m.values.cols(); ++c)
            out << ',' << nine_digits(m.values(r, c));
        out << '\n';
    }
}

DayMatrix read_day_matrix_csv(const std::string& path, const std::string& channel_id) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    const std::string name = std::filesystem::path(path).filename().string();
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return name + ":" + std::to_string(lineno); };
    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };

    if (!std::getline(in, line))
        throw EmptyData("'" + path + "' is empty");
    ++lineno;
    strip_cr(line);
    std::vector<std::string> head = split_fields(line);
    if (head.empty() || head[0] != "slot" || head.size() < 2)
        throw ParseError(where() + ": expected header 'slot,<day>,...'");

    DayMatrix m;
    m.channel_id = channel_id;
    m.day_labels.assign(head.begin() + 1, head.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != head.size())
            throw ParseError(where() + ": expected " + std::to_string(head.size()) +
                             " fields, got " + std::to_string(fields.size()));
        if (fields[0] != std::to_string(rows.size()))
            throw ParseError(where() + ": expected slot " + std::to_string(rows.size()) +
                             ", got '" + fields[0] + "'");
        std::vector<double> row;
        for (std::size_t c = 1; c < fields.size(); ++c)
            row.push_back(parse_double(fields[c], where()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw EmptyData("'" + path + "' has no slots");
    m.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(m.day_labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

void write_channel_csv(const std::string& path, const DayMatrix& m) {
    if (m.values.cols() != static_cast<Eigen::Index>(m.day_labels.size()))
        throw InvalidArgument("day matrix '" + m.channel_id + "': label count != columns");
    const Eigen::Index slots = m.values.rows();
    if (slots < 1 || 86400 % slots != 0)
        throw InvalidArgument("channel '" + m.channel_id +
                              "': slot count must divide 86400");
    const std::int64_t slot_seconds = 86400 / slots;
    std::ofstream out = open_out(path);
    out << "timestamp,watts\n";
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
        const std::int64_t day0 =
            parse_day_label(m.day_labels[static_cast<std::size_t>(c)]) * 86400;
        for (Eigen::Index s = 0; s < slots; ++s)
            out << day0 + s * slot_seconds << ',' << nine_digits(m.values(s, c)) << '\n';
    }
}

void write_house_dataset(const std::string& dir, const HouseDataset& hd) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_channel_csv((fs::path(dir) / "mains.csv").string(), hd.aggregate);
    nlohmann::ordered_json manifest;
    manifest["house_id"] = hd.house_id;
    manifest["slots_per_day"] = static_cast<int>(hd.aggregate.values.rows());
    manifest["mains"] = "mains.csv";
    manifest["appliances"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < hd.appliances.size(); ++i) {
        char file[32];
        std::snprintf(file, sizeof file, "ch_%03zu.csv", i);
        write_channel_csv((fs::path(dir) / file).string(), hd.appliances[i]);
        manifest["appliances"].push_back(
            {{"label", hd.appliances[i].channel_id}, {"file", file}});
    }
    std::ofstream out = open_out((fs::path(dir) / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

void save_artifacts(const std::string& path, const TrainArtifacts& art) {
    nlohmann::ordered_json j;
    j["format"] = "cosparse-artifacts";
    j["version"] = 1;
    j["model"] = art.model;
    j["slots_per_day"] = art.slots_per_day;
    j["hyper"] = serde::hyper_to_json(art.hyper);
    j["dicts"] = nlohmann::ordered_json::array();
    for (const AnalysisDict& d : art.dicts) {
        nlohmann::ordered_json e;
        e["appliance_id"] = d.appliance_id;
        e["rows"] = d.op.rows();
        e["cols"] = d.op.cols();
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(d.op.size()));
        for (Eigen::Index r = 0; r < d.op.rows(); ++r)
            for (Eigen::Index c = 0; c < d.op.cols(); ++c) vals.push_back(d.op(r, c));
        e["values"] = std::move(vals);
        j["dicts"].push_back(std::move(e));
    }
    j["traces"] = nlohmann::ordered_json::array();
    for (const TrainTrace& t : art.traces) {
        nlohmann::ordered_json e;
        e["iterations"] = t.iterations;
        e["final_fidelity"] = t.final_fidelity;
        e["objective"] = t.objective;
        e["constraint_residual"] = t.constraint_residual;
        j["traces"].push_back(std::move(e));
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

TrainArtifacts load_artifacts(const std::string& path) {
    const nlohmann::json j = parse_json_file(path, "artifacts");
    auto need = [&](const nlohmann::json& obj, const char* field) -> const nlohmann::json& {
        if (!obj.is_object() || !obj.contains(field))
            throw SchemaError("artifacts '" + path + "' is missing field '" + field + "'");
        return obj.at(field);
    };
    if (need(j, "format") != "cosparse-artifacts")
        throw SchemaError("'" + path + "' is not a cosparse artifacts file");
    if (need(j, "version") != 1)
        throw SchemaError("artifacts '" + path + "': unsupported version");

    TrainArtifacts art;
    try {
        art.model = need(j, "model").get<std::string>();
        art.slots_per_day = need(j, "slots_per_day").get<int>();
        const nlohmann::json& h = need(j, "hyper");
        art.hyper.lambda = need(h, "lambda").get<double>();
        art.hyper.mu = need(h, "mu").get<double>();
        art.hyper.eta = need(h, "eta").get<double>();
        art.hyper.gamma = need(h, "gamma").get<double>();
        art.hyper.atoms = need(h, "atoms").get<int>();
        art.hyper.max_outer = need(h, "max_outer").get<int>();
        art.hyper.tol = need(h, "tol").get<double>();
        art.hyper.ls_eps = need(h, "ls_eps").get<double>();
        art.hyper.seed = need(h, "seed").get<std::uint64_t>();
        art.hyper.bregman_variant = serde::enum_from_name<BregmanVariant, SchemaError>(
            need(h, "bregman_variant").get<std::string>(), "artifacts field 'bregman_variant'");
        art.hyper.incoherence_variant = serde::enum_from_name<IncoherenceVariant, SchemaError>(
            need(h, "incoherence_variant").get<std::string>(),
            "artifacts field 'incoherence_variant'");
        art.hyper.b_init = serde::enum_from_name<BregmanInit, SchemaError>(
            need(h, "b_init").get<std::string>(), "artifacts field 'b_init'");

        for (const nlohmann::json& e : need(j, "dicts")) {
            AnalysisDict d;
            d.appliance_id = need(e, "appliance_id").get<std::string>();
            const auto rows = need(e, "rows").get<Eigen::Index>();
            const auto cols = need(e, "cols").get<Eigen::Index>();
            const std::vector<double> vals = need(e, "values").get<std::vector<double>>();
            if (rows < 1 || cols < 1 ||
                vals.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
                throw SchemaError("artifacts '" + path + "': dictionary '" + d.appliance_id +
                                  "' has inconsistent dimensions");
            d.op.resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                    d.op(r, c) = vals[static_cast<std::size_t>(r * cols + c)];
            art.dicts.push_back(std::move(d));
        }
        if (j.contains("traces"))
            for (const nlohmann::json& e : j.at("traces")) {
                TrainTrace t;
                t.iterations = need(e, "iterations").get<int>();
                t.final_fidelity = need(e, "final_fidelity").get<double>();
                t.objective = need(e, "objective").get<std::vector<double>>();
                t.constraint_residual =
                    need(e, "constraint_residual").get<std::vector<double>>();
                art.traces.push_back(std::move(t));
            }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("artifacts '" + path + "': " + e.what());
    }
    if (art.dicts.empty())
        throw SchemaError("artifacts '" + path + "' holds no dictionaries");
    return art;
}

void write_estimates(const std::string& dir, const std::vector<DayMatrix>& estimates) {
    namespace fs = std::filesystem;
    if (estimates.empty())
        throw InvalidArgument("no estimates to write");
    std::error_code ec;
    fs::create_directories(dir, ec);
    nlohmann::ordered_json manifest;
    manifest["format"] = "cosparse-estimates";
    manifest["version"] = 1;
    manifest["estimates"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        char file[32];
        std::snprintf(file, sizeof file, "est_%03zu.csv", i);
        write_day_matrix_csv((fs::path(dir) / file).string(), estimates[i]);
        manifest["estimates"].push_back(
            {{"appliance_id", estimates[i].channel_id}, {"file", file}});
    }
    std::ofstream out = open_out((fs::path(dir) / "estimates.json").string());
    out << manifest.dump(2) << '\n';
}

std::vector<DayMatrix> read_estimates(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string manifest_path = (fs::path(dir) / "estimates.json").string();
    const nlohmann::json j = parse_json_file(manifest_path, "estimates manifest");
    if (!j.is_object() || j.value("format", "") != "cosparse-estimates")
        throw SchemaError("'" + manifest_path + "' is not an estimates manifest");
    if (!j.contains("estimates") || !j.at("estimates").is_array() || j.at("estimates").empty())
        throw SchemaError("estimates manifest '" + manifest_path + "' lists no estimates");
    std::vector<DayMatrix> out;
    for (const nlohmann::json& e : j.at("estimates")) {
        if (!e.is_object() || !e.contains("appliance_id") || !e.contains("file"))
            throw SchemaError("estimates manifest '" + manifest_path +
                              "': entries need 'appliance_id' and 'file'");
        out.push_back(read_day_matrix_csv((fs::path(dir) / e.at("file").get<std::string>()).string(),
                                          e.at("appliance_id").get<std::string>()));
    }
    return out;
}

void write_metrics_report_json(const std::string& path, const MetricsReport& rep) {
    nlohmann::ordered_json j;
    j["format"] = "cosparse-metrics";
    j["version"] = 1;
    j["accuracy"] = rep.accuracy;
    j["mean_accuracy"] = rep.mean_accuracy;
    j["std_accuracy"] = rep.std_accuracy;
    j["split_count"] = rep.split_count;
    j["appliances"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.appliances.size(); ++i) {
        const double ne = i < rep.per_appliance_normalized_error.size()
                              ? rep.per_appliance_normalized_error[i]
                              : 0.0;
        j["appliances"].push_back(
            {{"label", rep.appliances[i]}, {"normalized_error", ne}});
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_metrics_report_csv(const std::string& path, const MetricsReport& rep) {
    std::ofstream out = open_out(path);
    out << "accuracy,mean_accuracy,std_accuracy,split_count";
    for (const std::string& label : rep.appliances)
        out << ',' << csv_safe(label) << "_normalized_error";
    out << '\n';
    out << nine_digits(rep.accuracy) << ',' << nine_digits(rep.mean_accuracy) << ','
        << nine_digits(rep.std_accuracy) << ',' << rep.split_count;
    for (std::size_t i = 0; i < rep.appliances.size(); ++i)
        out << ',' << nine_digits(i < rep.per_appliance_normalized_error.size()
                                       ? rep.per_appliance_normalized_error[i]
                                       : 0.0);
    out << '\n';
}

}  // namespace cosparse
