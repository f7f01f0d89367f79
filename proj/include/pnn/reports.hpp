#pragma once

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pnn/errors.hpp"
#include "pnn/metrics.hpp"

namespace pnn {

/// Result of one training run inside an experiment, taken at the epoch
/// where alpha_para peaked.
struct TrialSummary {
    std::size_t trial = 0;  // 1-based label after median relabeling
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    double max_alpha_para = 0.0;
    std::array<std::size_t, 4> type_counts = {0, 0, 0, 0};

    std::size_t n_iv() const { return type_counts[3]; }
};

namespace detail {

inline std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// %a prints the exact binary value; strtod reads it back bit-identically.
inline std::string hexfloat(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_hexfloat(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw FormatError(detail::msg(where, ": cannot parse float '", s, "'"));
    return v;
}

inline std::size_t parse_count(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw FormatError(detail::msg(where, ": cannot parse count '", s, "'"));
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);  // binary keeps line ends byte-stable
    if (!f) throw IoError(msg("cannot open ", path, " for writing"));
    return f;
}

}  // namespace detail

/// Metrics table. Columns: epoch, each accuracy with 6 decimal places, then
/// the same accuracies as exact hex-floats so readers can round-trip the
/// doubles losslessly.
inline void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows) {
    if (rows.empty()) throw ConfigError("write_metrics_csv: no rows");
    const std::size_t k = rows.front().alpha_own.size();
    auto f = detail::open_out(path);
    f << "epoch,alpha_para";
    for (std::size_t i = 1; i <= k; ++i) f << ",alpha_" << i << ",alpha_" << i << "_prime";
    f << ",alpha_para_hex";
    for (std::size_t i = 1; i <= k; ++i)
        f << ",alpha_" << i << "_hex,alpha_" << i << "_prime_hex";
    f << "\n";
    for (const auto& row : rows) {
        if (row.alpha_own.size() != k || row.alpha_shared.size() != k)
            throw DimensionError("write_metrics_csv: rows have differing sub-network counts");
        f << row.epoch << "," << detail::fixed6(row.alpha_para);
        for (std::size_t i = 0; i < k; ++i)
            f << "," << detail::fixed6(row.alpha_own[i]) << ","
              << detail::fixed6(row.alpha_shared[i]);
        f << "," << detail::hexfloat(row.alpha_para);
        for (std::size_t i = 0; i < k; ++i)
            f << "," << detail::hexfloat(row.alpha_own[i]) << ","
              << detail::hexfloat(row.alpha_shared[i]);
        f << "\n";
    }
    if (!f) throw IoError(detail::msg("short write to ", path));
}

/// Reads a metrics table back; the hex-float columns are authoritative.
inline std::vector<EpochMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path));
    std::string line;
    if (!std::getline(f, line)) throw FormatError(detail::msg(path, ": missing header"));
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "epoch")
        throw FormatError(detail::msg(path, ": unexpected header"));
    // 1 epoch column + (1+2k) decimal + (1+2k) hex columns
    if (header.size() % 2 == 0 || header.size() < 5)
        throw FormatError(detail::msg(path, ": malformed header with ", header.size(), " columns"));
    const std::size_t k = (header.size() - 3) / 4;
    const std::size_t hex0 = 2 + 2 * k;

    std::vector<EpochMetrics> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw FormatError(detail::msg(path, ":", lineno, ": expected ", header.size(),
                                          " fields, got ", fields.size()));
        EpochMetrics m;
        const std::string where = detail::msg(path, ":", lineno);
        m.epoch = detail::parse_count(fields[0], where);
        m.alpha_para = detail::parse_hexfloat(fields[hex0], where);
        for (std::size_t i = 0; i < k; ++i) {
            m.alpha_own.push_back(detail::parse_hexfloat(fields[hex0 + 1 + 2 * i], where));
            m.alpha_shared.push_back(detail::parse_hexfloat(fields[hex0 + 2 + 2 * i], where));
        }
        rows.push_back(std::move(m));
    }
    return rows;
}

inline void write_taxonomy_json(const std::string& path, const ResultTaxonomy& tax) {
    nlohmann::json j;
    j["mask_mode"] = to_string(tax.mode);
    j["eval_count"] = tax.eval_count;
    j["total_correct"] = tax.total_correct;
    j["type_counts"] = {{"type_i", tax.type_i()},
                        {"type_ii", tax.type_ii()},
                        {"type_iii", tax.type_iii()},
                        {"type_iv", tax.type_iv()}};
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : tax.records)
        records.push_back({{"r1", rec.r1}, {"r2", rec.r2}, {"rp", rec.rp}, {"y", rec.y}});
    j["records"] = std::move(records);
    auto f = detail::open_out(path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError(detail::msg("short write to ", path));
}

inline ResultTaxonomy read_taxonomy_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path));
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(detail::msg(path, ": ", e.what()));
    }
    ResultTaxonomy tax;
    tax.mode = bias_mode_from_string(j.at("mask_mode").get<std::string>());
    tax.eval_count = j.at("eval_count").get<std::size_t>();
    tax.total_correct = j.at("total_correct").get<std::size_t>();
    const auto& counts = j.at("type_counts");
    tax.type_counts = {counts.at("type_i").get<std::size_t>(),
                       counts.at("type_ii").get<std::size_t>(),
                       counts.at("type_iii").get<std::size_t>(),
                       counts.at("type_iv").get<std::size_t>()};
    for (const auto& rec : j.at("records"))
        tax.records.push_back(TaxonomyRecord{rec.at("r1").get<int>(), rec.at("r2").get<int>(),
                                             rec.at("rp").get<int>(), rec.at("y").get<int>()});
    return tax;
}

/// Output-layer weight table. Neuron and sub-network indices are 1-based;
/// weights are printed with %.17g, which round-trips doubles exactly.
inline void write_weights_csv(const std::string& path, const WeightSnapshot& ws) {
    auto f = detail::open_out(path);
    f << "neuron_index,subnet,output_digit,weight\n";
    char buf[40];
    for (std::size_t j = 0; j < ws.neuron_count(); ++j) {
        const std::size_t subnet = ws.subnet_of(j);
        for (std::size_t d = 0; d < ws.weights.rows; ++d) {
            std::snprintf(buf, sizeof buf, "%.17g", ws.weights(d, j));
            f << (j + 1) << "," << (subnet + 1) << "," << d << "," << buf << "\n";
        }
    }
    if (!f) throw IoError(detail::msg("short write to ", path));
}

inline WeightSnapshot read_weights_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path));
    std::string line;
    if (!std::getline(f, line) || line.rfind("neuron_index,", 0) != 0)
        throw FormatError(detail::msg(path, ": unexpected header"));
    struct Cell {
        std::size_t neuron, subnet, digit;
        double weight;
    };
    std::vector<Cell> cells;
    std::size_t neurons = 0, digits = 0, subnets = 0, lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            throw FormatError(detail::msg(path, ":", lineno, ": expected 4 fields"));
        const std::string where = detail::msg(path, ":", lineno);
        Cell c{};
        c.neuron = detail::parse_count(fields[0], where);
        c.subnet = detail::parse_count(fields[1], where);
        c.digit = detail::parse_count(fields[2], where);
        c.weight = detail::parse_hexfloat(fields[3], where);
        if (c.neuron == 0 || c.subnet == 0)
            throw FormatError(detail::msg(path, ":", lineno, ": indices are 1-based"));
        neurons = std::max(neurons, c.neuron);
        digits = std::max(digits, c.digit + 1);
        subnets = std::max(subnets, c.subnet);
        cells.push_back(c);
    }
    if (cells.empty()) throw FormatError(detail::msg(path, ": no data rows"));
    WeightSnapshot ws;
    ws.weights = Matrix(digits, neurons);
    ws.subnet_sizes.assign(subnets, 0);
    std::vector<std::size_t> owner(neurons, 0);
    for (const auto& c : cells) {
        ws.weights(c.digit, c.neuron - 1) = c.weight;
        owner[c.neuron - 1] = c.subnet;
    }
    for (std::size_t j = 0; j < neurons; ++j) {
        if (owner[j] == 0) throw FormatError(detail::msg(path, ": neuron ", j + 1, " has no rows"));
        ++ws.subnet_sizes[owner[j] - 1];
    }
    return ws;
}

inline void write_trial_summaries_csv(const std::string& path,
                                      const std::vector<TrialSummary>& trials) {
    auto f = detail::open_out(path);
    f << "trial,seed,best_epoch,max_alpha_para,type_i,type_ii,type_iii,type_iv,"
         "max_alpha_para_hex\n";
    for (const auto& t : trials) {
        f << t.trial << "," << t.seed << "," << t.best_epoch << ","
          << detail::fixed6(t.max_alpha_para) << "," << t.type_counts[0] << ","
          << t.type_counts[1] << "," << t.type_counts[2] << "," << t.type_counts[3] << ","
          << detail::hexfloat(t.max_alpha_para) << "\n";
    }
    if (!f) throw IoError(detail::msg("short write to ", path));
}

inline void write_trial_summaries_json(const std::string& path,
                                       const std::vector<TrialSummary>& trials) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trials)
        arr.push_back({{"trial", t.trial},
                       {"seed", t.seed},
                       {"best_epoch", t.best_epoch},
                       {"max_alpha_para", t.max_alpha_para},
                       {"type_i", t.type_counts[0]},
                       {"type_ii", t.type_counts[1]},
                       {"type_iii", t.type_counts[2]},
                       {"type_iv", t.type_counts[3]}});
    auto f = detail::open_out(path);
    f << nlohmann::json{{"trials", std::move(arr)}}.dump(2) << "\n";
    if (!f) throw IoError(detail::msg("short write to ", path));
}

inline std::vector<TrialSummary> read_trial_summaries_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path));
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(detail::msg(path, ": ", e.what()));
    }
    std::vector<TrialSummary> trials;
    for (const auto& t : j.at("trials")) {
        TrialSummary s;
        s.trial = t.at("trial").get<std::size_t>();
        s.seed = t.at("seed").get<std::uint64_t>();
        s.best_epoch = t.at("best_epoch").get<std::size_t>();
        s.max_alpha_para = t.at("max_alpha_para").get<double>();
        s.type_counts = {t.at("type_i").get<std::size_t>(), t.at("type_ii").get<std::size_t>(),
                         t.at("type_iii").get<std::size_t>(), t.at("type_iv").get<std::size_t>()};
        trials.push_back(s);
    }
    return trials;
}

/// Comparison table across activation kinds: n_IV and max alpha_para per
/// trial, then one average row per activation.
inline void write_activation_table_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, std::vector<TrialSummary>>>& by_activation) {
    auto f = detail::open_out(path);
    f << "activation,trial,n_iv,max_alpha_para\n";
    for (const auto& [name, trials] : by_activation) {
        double sum_alpha = 0.0;
        double sum_niv = 0.0;
        for (const auto& t : trials) {
            f << name << "," << t.trial << "," << t.n_iv() << ","
              << detail::fixed6(t.max_alpha_para) << "\n";
            sum_alpha += t.max_alpha_para;
            sum_niv += static_cast<double>(t.n_iv());
        }
        if (!trials.empty()) {
            const double n = static_cast<double>(trials.size());
            f << name << ",average," << detail::fixed6(sum_niv / n) << ","
              << detail::fixed6(sum_alpha / n) << "\n";
        }
    }
    if (!f) throw IoError(detail::msg("short write to ", path));
}

}  // namespace pnn
