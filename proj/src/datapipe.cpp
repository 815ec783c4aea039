#include "cosparse/datapipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "json.hpp"

#include "cosparse/errors.hpp"
#include "cosparse/train.hpp"

namespace cosparse {

namespace {

constexpr std::int64_t kDaySeconds = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Unbiased draw from [0, bound) by rejection; avoids the distribution
// classes whose streams vary across standard libraries.
std::size_t bounded_draw(std::mt19937_64& g, std::size_t bound) {
    const std::uint64_t top = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = top - top % static_cast<std::uint64_t>(bound);
    std::uint64_t v = g();
    while (v >= limit) v = g();
    return static_cast<std::size_t>(v % bound);
}

DayMatrix select_days(const DayMatrix& m, const std::vector<Eigen::Index>& cols) {
    DayMatrix out;
    out.channel_id = m.channel_id;
    out.values.resize(m.values.rows(), static_cast<Eigen::Index>(cols.size()));
    out.day_labels.reserve(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.values.col(static_cast<Eigen::Index>(k)) = m.values.col(cols[k]);
        out.day_labels.push_back(m.day_labels[static_cast<std::size_t>(cols[k])]);
    }
    return out;
}

double channel_energy_ratio(const HouseDataset& hd) {
    double num = 0.0;
    for (const DayMatrix& a : hd.appliances) num += a.values.sum();
    const double den = hd.aggregate.values.sum();
    return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 1.0;
}

}  // namespace

void validate(const TimeSeries& ts) {
    if (ts.timestamps.empty())
        throw InvalidArgument("time series '" + ts.channel_id + "' is empty");
    if (ts.timestamps.size() != ts.values.size())
        throw InvalidArgument("time series '" + ts.channel_id +
                              "': timestamp and value counts differ");
    for (std::size_t i = 1; i < ts.timestamps.size(); ++i)
        if (ts.timestamps[i] <= ts.timestamps[i - 1])
            throw InvalidArgument("time series '" + ts.channel_id +
                                  "': timestamps must be strictly increasing");
}

TimeSeries resample_mean(const TimeSeries& ts, std::int64_t slot_seconds) {
    validate(ts);
    if (slot_seconds < 1)
        throw InvalidArgument("slot_seconds must be at least 1");
    double expected = 1.0;
    if (ts.timestamps.size() >= 2) {
        std::vector<std::int64_t> gaps(ts.timestamps.size() - 1);
        for (std::size_t i = 0; i + 1 < ts.timestamps.size(); ++i)
            gaps[i] = ts.timestamps[i + 1] - ts.timestamps[i];
        std::sort(gaps.begin(), gaps.end());
        const std::size_t half = gaps.size() / 2;
        const double cadence =
            gaps.size() % 2 == 1
                ? static_cast<double>(gaps[half])
                : 0.5 * (static_cast<double>(gaps[half - 1]) + static_cast<double>(gaps[half]));
        expected = static_cast<double>(slot_seconds) / cadence;
    }
    TimeSeries out;
    out.channel_id = ts.channel_id;
    std::size_t i = 0;
    const std::size_t n = ts.timestamps.size();
    while (i < n) {
        const std::int64_t w0 = floor_div(ts.timestamps[i], slot_seconds) * slot_seconds;
        double sum = 0.0;
        std::size_t count = 0;
        while (i < n && ts.timestamps[i] < w0 + slot_seconds) {
            sum += ts.values[i];
            ++count;
            ++i;
        }
        if (static_cast<double>(count) >= 0.5 * expected) {
            out.timestamps.push_back(w0);
            out.values.push_back(sum / static_cast<double>(count));
        }
    }
    return out;
}

// Calendar conversions use the standard era-based civil algorithms.
std::string day_label(std::int64_t days_since_epoch) {
    std::int64_t z = days_since_epoch + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u",
                  static_cast<long long>(y + (m <= 2)), m, d);
    return buf;
}

std::int64_t parse_day_label(const std::string& label) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (label.size() != 10 || label[4] != '-' || label[7] != '-' ||
        std::sscanf(label.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3)
        throw ParseError("bad day label '" + label + "': expected YYYY-MM-DD");
    const std::int64_t yy = static_cast<std::int64_t>(y) - (m <= 2);
    const std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(yy - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const std::int64_t z = era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    if (day_label(z) != label)
        throw ParseError("bad day label '" + label + "': no such calendar day");
    return z;
}

DayMatrix build_day_matrix(const TimeSeries& ts, int slots_per_day,
                           std::vector<std::string>* dropped_days) {
    validate(ts);
    if (slots_per_day < 1 || kDaySeconds % slots_per_day != 0)
        throw InvalidArgument("slots_per_day must be a positive divisor of 86400");
    const std::int64_t slot_seconds = kDaySeconds / slots_per_day;

    struct DayFill {
        std::vector<double> slots;
        int filled = 0;
    };
    std::map<std::int64_t, DayFill> days;
    for (std::size_t k = 0; k < ts.timestamps.size(); ++k) {
        const std::int64_t t = ts.timestamps[k];
        const std::int64_t day = floor_div(t, kDaySeconds);
        const std::int64_t offset = t - day * kDaySeconds;
        if (offset % slot_seconds != 0)
            throw InvalidArgument("channel '" + ts.channel_id + "': timestamp " +
                                  std::to_string(t) + " is not on the " +
                                  std::to_string(slot_seconds) + " s slot grid");
        DayFill& f = days[day];
        if (f.slots.empty()) f.slots.assign(static_cast<std::size_t>(slots_per_day), 0.0);
        f.slots[static_cast<std::size_t>(offset / slot_seconds)] = ts.values[k];
        ++f.filled;
    }

    std::vector<std::int64_t> keep;
    for (const auto& [day, fill] : days) {
        if (fill.filled == slots_per_day)
            keep.push_back(day);
        else if (dropped_days)
            dropped_days->push_back(day_label(day));
    }
    if (keep.empty())
        throw EmptyData("channel '" + ts.channel_id + "' has no complete day");

    DayMatrix dm;
    dm.channel_id = ts.channel_id;
    dm.values.resize(slots_per_day, static_cast<Eigen::Index>(keep.size()));
    dm.day_labels.reserve(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const DayFill& f = days[keep[c]];
        for (int s = 0; s < slots_per_day; ++s)
            dm.values(s, static_cast<Eigen::Index>(c)) = f.slots[static_cast<std::size_t>(s)];
        dm.day_labels.push_back(day_label(keep[c]));
    }
    return dm;
}

namespace {

TimeSeries parse_channel_csv(const std::filesystem::path& path, const std::string& channel_id) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    const std::string name = path.filename().string();
    std::string line;
    std::size_t lineno = 0;
    auto where = [&] { return name + ":" + std::to_string(lineno); };
    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };

    if (!std::getline(in, line))
        throw EmptyData("'" + path.string() + "' is empty");
    ++lineno;
    strip_cr(line);
    if (line != "timestamp,watts")
        throw ParseError(where() + ": expected header 'timestamp,watts'");

    TimeSeries ts;
    ts.channel_id = channel_id;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty())
            throw ParseError(where() + ": empty row");
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(where() + ": expected 'timestamp,watts' row");
        std::int64_t t = 0;
        auto tr = std::from_chars(line.data(), line.data() + comma, t);
        if (tr.ec != std::errc() || tr.ptr != line.data() + comma)
            throw ParseError(where() + ": bad timestamp '" + line.substr(0, comma) + "'");
        double w = 0.0;
        const char* vbeg = line.data() + comma + 1;
        const char* vend = line.data() + line.size();
        auto wr = std::from_chars(vbeg, vend, w);
        if (wr.ec != std::errc() || wr.ptr != vend)
            throw ParseError(where() + ": bad watts value '" + line.substr(comma + 1) + "'");
        if (!ts.timestamps.empty()) {
            if (t == ts.timestamps.back())
                throw SchemaError(where() + ": duplicate timestamp " + std::to_string(t));
            if (t < ts.timestamps.back())
                throw SchemaError(where() + ": timestamps out of order");
        }
        ts.timestamps.push_back(t);
        ts.values.push_back(w);
    }
    if (ts.timestamps.empty())
        throw EmptyData("'" + path.string() + "' has no samples");
    return ts;
}

}  // namespace

HouseDataset load_house_csv(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in)
        throw IoError("cannot open '" + manifest_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest '" + manifest_path + "': " + e.what());
    }

    auto need = [&](const char* field) -> const nlohmann::json& {
        if (!j.is_object() || !j.contains(field))
            throw SchemaError("manifest '" + manifest_path + "' is missing field '" +
                              field + "'");
        return j.at(field);
    };
    const nlohmann::json& jid = need("house_id");
    const nlohmann::json& jslots = need("slots_per_day");
    const nlohmann::json& jmains = need("mains");
    const nlohmann::json& japps = need("appliances");
    if (!jid.is_string() || !jslots.is_number_integer() || !jmains.is_string() ||
        !japps.is_array() || japps.empty())
        throw SchemaError("manifest '" + manifest_path +
                          "': house_id and mains must be strings, slots_per_day an "
                          "integer, appliances a nonempty array");
    const int slots_per_day = jslots.get<int>();
    if (slots_per_day < 1 || kDaySeconds % slots_per_day != 0)
        throw SchemaError("manifest '" + manifest_path +
                          "': slots_per_day must be a positive divisor of 86400");

    const fs::path base = fs::path(manifest_path).parent_path();
    const std::int64_t slot_seconds = kDaySeconds / slots_per_day;
    auto fold = [&](const std::string& file, const std::string& channel) {
        TimeSeries raw = parse_channel_csv(base / file, channel);
        return build_day_matrix(resample_mean(raw, slot_seconds), slots_per_day);
    };

    HouseDataset hd;
    hd.house_id = jid.get<std::string>();
    hd.aggregate = fold(jmains.get<std::string>(), "mains");
    std::set<std::string> seen;
    for (const nlohmann::json& e : japps) {
        if (!e.is_object() || !e.contains("label") || !e.contains("file") ||
            !e.at("label").is_string() || !e.at("file").is_string())
            throw SchemaError("manifest '" + manifest_path +
                              "': each appliance needs string fields 'label' and 'file'");
        const std::string label = e.at("label").get<std::string>();
        if (!seen.insert(label).second)
            throw SchemaError("manifest '" + manifest_path + "': duplicate appliance label '" +
                              label + "'");
        hd.appliances.push_back(fold(e.at("file").get<std::string>(), label));
    }

    // keep only the days complete in every channel, in chronological order
    std::vector<std::string> common;
    for (const std::string& day : hd.aggregate.day_labels) {
        bool everywhere = true;
        for (const DayMatrix& a : hd.appliances)
            everywhere = everywhere && std::find(a.day_labels.begin(), a.day_labels.end(),
                                                 day) != a.day_labels.end();
        if (everywhere) common.push_back(day);
    }
    if (common.empty())
        throw EmptyData("house '" + hd.house_id + "': no day is complete in every channel");
    auto restrict_to = [&](DayMatrix& m) {
        std::vector<Eigen::Index> cols;
        for (const std::string& day : common) {
            const auto it = std::find(m.day_labels.begin(), m.day_labels.end(), day);
            cols.push_back(static_cast<Eigen::Index>(it - m.day_labels.begin()));
        }
        m = select_days(m, cols);
    };
    restrict_to(hd.aggregate);
    for (DayMatrix& a : hd.appliances) restrict_to(a);

    hd.coverage = channel_energy_ratio(hd);
    return hd;
}

std::pair<HouseDataset, HouseDataset> split_training_mode(const HouseDataset& ds,
                                                          double fraction,
                                                          std::uint64_t seed) {
    if (!std::isfinite(fraction) || fraction <= 0.0 || fraction >= 1.0)
        throw InvalidArgument("fraction must lie strictly between 0 and 1");
    const Eigen::Index n = ds.aggregate.days();
    for (const DayMatrix& a : ds.appliances)
        if (a.days() != n)
            throw InvalidArgument("channels disagree on day count");
    // round half up, so fraction 0.5 of 3 days trains on 2
    const auto k = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n) + 0.5));
    if (k < 1 || k >= n)
        throw InvalidArgument("degenerate split: " + std::to_string(k) + " of " +
                              std::to_string(n) + " days would train");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 g(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[bounded_draw(g, i + 1)]);
    std::vector<Eigen::Index> train_cols(order.begin(), order.begin() + k);
    std::vector<Eigen::Index> test_cols(order.begin() + k, order.end());
    std::sort(train_cols.begin(), train_cols.end());
    std::sort(test_cols.begin(), test_cols.end());

    auto take = [&](const std::vector<Eigen::Index>& cols) {
        HouseDataset part;
        part.house_id = ds.house_id;
        part.coverage = ds.coverage;
        part.aggregate = select_days(ds.aggregate, cols);
        for (const DayMatrix& a : ds.appliances) part.appliances.push_back(select_days(a, cols));
        return part;
    };
    return {take(train_cols), take(test_cols)};
}

TestingSplit split_testing_mode(const std::vector<HouseDataset>& houses,
                                std::size_t train_house) {
    if (houses.size() < 2)
        throw ProtocolError("house-level evaluation needs at least two houses");
    if (train_house >= houses.size())
        throw InvalidArgument("train house index out of range");

    auto has_label = [](const HouseDataset& h, const std::string& label) {
        for (const DayMatrix& a : h.appliances)
            if (a.channel_id == label) return true;
        return false;
    };
    std::vector<std::string> shared;
    for (const DayMatrix& a : houses[train_house].appliances) {
        bool everywhere = true;
        for (const HouseDataset& h : houses) everywhere = everywhere && has_label(h, a.channel_id);
        if (everywhere) shared.push_back(a.channel_id);
    }
    if (shared.empty())
        throw ProtocolError("no appliance label is shared by every house");

    const std::set<std::string> shared_set(shared.begin(), shared.end());
    std::set<std::string> dropped;
    for (const HouseDataset& h : houses)
        for (const DayMatrix& a : h.appliances)
            if (shared_set.count(a.channel_id) == 0) dropped.insert(a.channel_id);

    auto filter = [&](const HouseDataset& h) {
        HouseDataset f;
        f.house_id = h.house_id;
        f.aggregate = h.aggregate;
        for (const std::string& label : shared)
            for (const DayMatrix& a : h.appliances)
                if (a.channel_id == label) {
                    f.appliances.push_back(a);
                    break;
                }
        f.coverage = channel_energy_ratio(f);
        return f;
    };

    TestingSplit out;
    out.dropped_labels.assign(dropped.begin(), dropped.end());
    out.train = filter(houses[train_house]);
    for (std::size_t i = 0; i < houses.size(); ++i)
        if (i != train_house) out.test.push_back(filter(houses[i]));
    return out;
}

void validate(const SynthConfig& cfg) {
    auto bad = [](const std::string& field) {
        throw ConfigError("synth config field '" + field + "' is invalid");
    };
    if (cfg.slots_per_day < 1) bad("slots_per_day");
    if (cfg.days < 1) bad("days");
    if (cfg.appliances.empty()) bad("appliances");
    try {
        parse_day_label(cfg.start_day);
    } catch (const ParseError&) {
        bad("start_day");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < cfg.appliances.size(); ++i) {
        const ApplianceSpec& a = cfg.appliances[i];
        const std::string at = "appliances[" + std::to_string(i) + "].";
        if (a.label.empty() || !seen.insert(a.label).second) bad(at + "label");
        if (a.levels.empty()) bad(at + "levels");
        for (double v : a.levels)
            if (!std::isfinite(v) || v < 0.0) bad(at + "levels");
        if (!std::isfinite(a.duty) || a.duty < 0.0 || a.duty > 1.0) bad(at + "duty");
        if (a.period < 0) bad(at + "period");
        if (a.jitter < 0) bad(at + "jitter");
        if (!std::isfinite(a.noise_sigma) || a.noise_sigma < 0.0) bad(at + "noise_sigma");
    }
}

HouseDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const int d = cfg.slots_per_day;
    const int n = cfg.days;
    const std::int64_t day0 = parse_day_label(cfg.start_day);
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) labels[static_cast<std::size_t>(k)] = day_label(day0 + k);

    HouseDataset hd;
    hd.house_id = cfg.house_id;
    hd.coverage = 1.0;
    constexpr double kTau = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < cfg.appliances.size(); ++i) {
        const ApplianceSpec& a = cfg.appliances[i];
        std::mt19937_64 g(appliance_seed(seed, i));
        std::normal_distribution<double> noise(0.0, 1.0);
        const int period = a.period > 0 ? a.period : std::max(1, d / 12);
        const int on_len = std::clamp(static_cast<int>(std::llround(a.duty * d)), 0, d);
        const auto states = static_cast<long long>(a.levels.size());
        // fixed base placement per appliance; days wobble around it
        int base_start = 0, base_phase = 0;
        double base_p1 = 0.0, base_p2 = 0.0;
        switch (a.type) {
            case SignatureType::two_state:
            case SignatureType::multi_state:
                base_start = static_cast<int>(bounded_draw(g, static_cast<std::size_t>(d)));
                break;
            case SignatureType::periodic_cycler:
                base_phase =
                    static_cast<int>(bounded_draw(g, static_cast<std::size_t>(2 * period)));
                break;
            case SignatureType::continuous_varying:
                base_p1 = static_cast<double>(g()) * 0x1p-64;
                base_p2 = static_cast<double>(g()) * 0x1p-64;
                break;
        }
        Matrix x = Matrix::Zero(d, n);
        for (int day = 0; day < n; ++day) {
            int wobble = 0;
            if (a.jitter > 0)
                wobble = static_cast<int>(bounded_draw(
                             g, static_cast<std::size_t>(2 * a.jitter + 1))) -
                         a.jitter;
            const int start = ((base_start + wobble) % d + d) % d;
            const int cycle = 2 * period;
            const int phase = ((base_phase + wobble) % cycle + cycle) % cycle;
            const double p1 = base_p1 + wobble / static_cast<double>(d);
            const double p2 = base_p2 + wobble / static_cast<double>(d);
            for (int s = 0; s < d; ++s) {
                double v = 0.0;
                switch (a.type) {
                    case SignatureType::two_state:
                        if ((s - start + d) % d < on_len) v = a.levels[0];
                        break;
                    case SignatureType::multi_state: {
                        const int pos = (s - start + d) % d;
                        if (pos < on_len)
                            v = a.levels[static_cast<std::size_t>(
                                static_cast<long long>(pos) * states / on_len)];
                        break;
                    }
                    case SignatureType::periodic_cycler:
                        if ((s + phase) / period % 2 == 0) v = a.levels[0];
                        break;
                    case SignatureType::continuous_varying:
                        // nonnegative by construction: 0.5 - 0.3 - 0.2 = 0
                        v = a.levels[0] *
                            (0.5 + 0.3 * std::sin(kTau * (s / static_cast<double>(d) + p1)) +
                             0.2 * std::sin(2.0 * kTau * (s / static_cast<double>(d) + p2)));
                        break;
                }
                if (a.noise_sigma > 0.0) v += a.noise_sigma * noise(g);
                x(s, day) = std::max(v, 0.0);
            }
        }
        hd.appliances.push_back({a.label, std::move(x), labels});
    }

    hd.aggregate.channel_id = "mains";
    hd.aggregate.day_labels = labels;
    hd.aggregate.values = Matrix::Zero(d, n);
    for (const DayMatrix& a : hd.appliances) hd.aggregate.values += a.values;
    return hd;
}

namespace {

const char* type_name(SignatureType t) {
    switch (t) {
        case SignatureType::two_state: return "two_state";
        case SignatureType::multi_state: return "multi_state";
        case SignatureType::periodic_cycler: return "periodic_cycler";
        case SignatureType::continuous_varying: return "continuous_varying";
    }
    return "two_state";
}

SignatureType type_from_name(const std::string& s) {
    if (s == "two_state") return SignatureType::two_state;
    if (s == "multi_state") return SignatureType::multi_state;
    if (s == "periodic_cycler") return SignatureType::periodic_cycler;
    if (s == "continuous_varying") return SignatureType::continuous_varying;
    throw ConfigError("synth config field 'type' has unknown value '" + s + "'");
}

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& scope) {
    for (const auto& item : obj.items())
        if (allowed.count(item.key()) == 0)
            throw ConfigError("synth config field '" + scope + item.key() + "' is unknown");
}

}  // namespace

SynthConfig parse_synth_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("synth config: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("synth config must be a JSON object");
    reject_unknown(j, {"house_id", "slots_per_day", "days", "start_day", "appliances"}, "");

    SynthConfig cfg;
    auto typed = [](bool ok, const std::string& field) {
        if (!ok) throw ConfigError("synth config field '" + field + "' has the wrong type");
    };
    if (j.contains("house_id")) {
        typed(j["house_id"].is_string(), "house_id");
        cfg.house_id = j["house_id"].get<std::string>();
    }
    if (j.contains("slots_per_day")) {
        typed(j["slots_per_day"].is_number_integer(), "slots_per_day");
        cfg.slots_per_day = j["slots_per_day"].get<int>();
    }
    if (j.contains("days")) {
        typed(j["days"].is_number_integer(), "days");
        cfg.days = j["days"].get<int>();
    }
    if (j.contains("start_day")) {
        typed(j["start_day"].is_string(), "start_day");
        cfg.start_day = j["start_day"].get<std::string>();
    }
    if (j.contains("appliances")) {
        typed(j["appliances"].is_array(), "appliances");
        for (std::size_t i = 0; i < j["appliances"].size(); ++i) {
            const nlohmann::json& e = j["appliances"][i];
            const std::string at = "appliances[" + std::to_string(i) + "].";
            typed(e.is_object(), "appliances[" + std::to_string(i) + "]");
            reject_unknown(e, {"label", "type", "levels", "duty", "period", "jitter", "noise_sigma"},
                           at);
            ApplianceSpec a;
            typed(e.contains("label") && e["label"].is_string(), at + "label");
            a.label = e["label"].get<std::string>();
            if (e.contains("type")) {
                typed(e["type"].is_string(), at + "type");
                a.type = type_from_name(e["type"].get<std::string>());
            }
            if (e.contains("levels")) {
                typed(e["levels"].is_array() && !e["levels"].empty(), at + "levels");
                a.levels.clear();
                for (const nlohmann::json& v : e["levels"]) {
                    typed(v.is_number(), at + "levels");
                    a.levels.push_back(v.get<double>());
                }
            }
            if (e.contains("duty")) {
                typed(e["duty"].is_number(), at + "duty");
                a.duty = e["duty"].get<double>();
            }
            if (e.contains("period")) {
                typed(e["period"].is_number_integer(), at + "period");
                a.period = e["period"].get<int>();
            }
            if (e.contains("jitter")) {
                typed(e["jitter"].is_number_integer(), at + "jitter");
                a.jitter = e["jitter"].get<int>();
            }
            if (e.contains("noise_sigma")) {
                typed(e["noise_sigma"].is_number(), at + "noise_sigma");
                a.noise_sigma = e["noise_sigma"].get<double>();
            }
            cfg.appliances.push_back(std::move(a));
        }
    }
    validate(cfg);
    return cfg;
}

std::string serialize_synth_config(const SynthConfig& cfg) {
    nlohmann::ordered_json j;
    j["house_id"] = cfg.house_id;
    j["slots_per_day"] = cfg.slots_per_day;
    j["days"] = cfg.days;
    j["start_day"] = cfg.start_day;
    j["appliances"] = nlohmann::ordered_json::array();
    for (const ApplianceSpec& a : cfg.appliances) {
        nlohmann::ordered_json e;
        e["label"] = a.label;
        e["type"] = type_name(a.type);
        e["levels"] = a.levels;
        e["duty"] = a.duty;
        e["period"] = a.period;
        e["jitter"] = a.jitter;
        e["noise_sigma"] = a.noise_sigma;
        j["appliances"].push_back(std::move(e));
    }
    return j.dump(2);
}

namespace {

// The comb-band fixture: appliance i emits a 48-slot comb (six slots at full
// amplitude, six at 0.35, repeating) inside one of three disjoint slot bands.
// Day indices are global across the 30-day horizon so the training slice
// (days 0..19, band rotating with day parity) and the test slice (days
// 20..29, home band i) share one amplitude schedule.
HouseDataset disjoint_preset_slice(int day_begin, int day_end, const char* house_id) {
    constexpr int d = 144;
    constexpr int bands = 3;
    constexpr int bw = d / bands;
    constexpr double level[bands] = {1.0, 1.5, 2.2};
    const char* names[bands] = {"band_low", "band_mid", "band_high"};
    const int n = day_end - day_begin;
    const std::int64_t day0 = parse_day_label("2024-03-01");
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        labels[static_cast<std::size_t>(k)] = day_label(day0 + day_begin + k);

    HouseDataset hd;
    hd.house_id = house_id;
    hd.coverage = 1.0;
    for (int i = 0; i < bands; ++i) {
        Matrix x = Matrix::Zero(d, n);
        for (int col = 0; col < n; ++col) {
            const int day = day_begin + col;
            const int band = day < 20 ? (i + 1 + day % 2) % bands : i;
            const double amp = level[i] * (0.8 + 0.1 * ((day * (i + 3)) % 5));
            for (int s = 0; s < bw; ++s) {
                const double shape = (s / 6) % 2 == 0 ? 1.0 : 0.35;
                x(band * bw + s, col) = amp * shape;
            }
        }
        hd.appliances.push_back({names[i], std::move(x), labels});
    }
    hd.aggregate.channel_id = "mains";
    hd.aggregate.day_labels = labels;
    hd.aggregate.values = Matrix::Zero(d, n);
    for (const DayMatrix& a : hd.appliances) hd.aggregate.values += a.values;
    return hd;
}

}  // namespace

HouseDataset disjoint_preset_train() { return disjoint_preset_slice(0, 20, "disjoint-train"); }

HouseDataset disjoint_preset_test() { return disjoint_preset_slice(20, 30, "disjoint-test"); }

SynthConfig benchmark_preset_config() {
    SynthConfig cfg;
    cfg.house_id = "bench";
    cfg.slots_per_day = 72;
    cfg.days = 30;
    cfg.start_day = "2024-05-01";
    cfg.appliances = {
        {"heater", SignatureType::two_state, {2.0}, 0.25, 0, 36, 0.06},
        {"washer", SignatureType::multi_state, {1.2, 3.0, 0.8}, 0.2, 0, 36, 0.06},
        {"fridge", SignatureType::periodic_cycler, {1.5}, 0.5, 6, 6, 0.06},
        {"electronics", SignatureType::continuous_varying, {1.0}, 0.0, 0, 72, 0.06},
    };
    return cfg;
}

}  // namespace cosparse
