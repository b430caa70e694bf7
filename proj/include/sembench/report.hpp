#pragma once

// Report envelopes and their human-readable projections. The JSON file is
// canonical; the text table and CSV are pure functions of the parsed JSON,
// so rendering is idempotent and downstream tooling can rely on the JSON
// alone. Run manifests are written as sidecar files (never embedded in the
// report body) to keep reports byte-comparable across runs.

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sembench/errors.hpp"
#include "sembench/metrics.hpp"
#include "sembench/ragpipeline.hpp"
#include "sembench/version.hpp"

namespace sembench {

struct RunManifest {
    std::string subcommand;
    nlohmann::json resolved_config;
    std::map<std::string, std::string> input_digests;
    std::string tool_version = kVersion;
    std::string timestamp_utc;
};

inline std::string current_timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"subcommand", m.subcommand},
            {"resolved_config", m.resolved_config},
            {"input_digests", m.input_digests},
            {"tool_version", m.tool_version},
            {"timestamp_utc", m.timestamp_utc}};
}

inline void write_manifest(const std::filesystem::path& path,
                           const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    out << to_json(manifest).dump(2) << "\n";
}

inline nlohmann::json
search_report_envelope(int k, ApMode ap_mode,
                       const std::vector<MetricReport>& runs) {
    nlohmann::json run_array = nlohmann::json::array();
    for (const auto& r : runs) {
        run_array.push_back(to_json(r));
    }
    return {{"k", k}, {"ap_mode", to_string(ap_mode)}, {"runs", run_array}};
}

namespace detail {

inline std::string fixed3(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << v;
    return out.str();
}

inline std::string percent2(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << v * 100.0 << "%";
    return out.str();
}

// Column-aligned table: first column left, the rest right.
inline std::string
render_aligned(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) {
        return {};
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                out << std::left << std::setw(static_cast<int>(widths[c]))
                    << row[c];
            } else {
                out << "  " << std::right
                    << std::setw(static_cast<int>(widths[c])) << row[c];
            }
        }
        out << "\n";
    }
    return out.str();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') {
            quoted += "\"\"";
        } else {
            quoted += c;
        }
    }
    quoted += "\"";
    return quoted;
}

} // namespace detail

// Text table with the evaluation-results column set:
// Model, NDCG@k, MRR@k, mAP@k, Emb. Size.
inline std::string render_metric_table(const nlohmann::json& envelope) {
    const int k = envelope.at("k").get<int>();
    const std::string at = "@" + std::to_string(k);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Model", "NDCG" + at, "MRR" + at, "mAP" + at, "Emb. Size"});
    for (const auto& run : envelope.at("runs")) {
        const auto& agg = run.at("aggregates");
        rows.push_back({run.at("run_label").get<std::string>(),
                        detail::fixed3(agg.at("ndcg").get<double>()),
                        detail::fixed3(agg.at("mrr").get<double>()),
                        detail::fixed3(agg.at("map").get<double>()),
                        run.contains("embedding_dim")
                            ? std::to_string(run.at("embedding_dim").get<int>())
                            : "-"});
    }
    return detail::render_aligned(rows);
}

inline std::string render_metric_csv(const nlohmann::json& envelope) {
    const int k = envelope.at("k").get<int>();
    const std::string at = "@" + std::to_string(k);
    std::ostringstream out;
    out << "Model,NDCG" << at << ",MRR" << at << ",mAP" << at << ",Emb. Size\n";
    for (const auto& run : envelope.at("runs")) {
        const auto& agg = run.at("aggregates");
        out << detail::csv_field(run.at("run_label").get<std::string>()) << ","
            << detail::fixed3(agg.at("ndcg").get<double>()) << ","
            << detail::fixed3(agg.at("mrr").get<double>()) << ","
            << detail::fixed3(agg.at("map").get<double>()) << ","
            << (run.contains("embedding_dim")
                    ? std::to_string(run.at("embedding_dim").get<int>())
                    : "")
            << "\n";
    }
    return out.str();
}

inline nlohmann::json
rag_report_envelope(const std::string& encoder_label,
                    const std::vector<std::pair<int, RagReport>>& runs) {
    nlohmann::json run_array = nlohmann::json::array();
    for (const auto& [retrieval_k, report] : runs) {
        nlohmann::json entry = to_json(report);
        entry["retrieval_k"] = retrieval_k;
        run_array.push_back(std::move(entry));
    }
    return {{"encoder", encoder_label}, {"runs", run_array}};
}

namespace detail {

inline std::string rag_accuracy_cell(const nlohmann::json& envelope, int k) {
    for (const auto& run : envelope.at("runs")) {
        if (run.at("retrieval_k").get<int>() == k) {
            return percent2(run.at("overall_accuracy").get<double>());
        }
    }
    return "N/A";
}

} // namespace detail

// Text table with the RAG column set: Encoder, Top 3 Accuracy,
// Top 1 Accuracy. A retrieval depth that was not run renders as N/A.
inline std::string render_rag_table(const nlohmann::json& envelope) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Encoder", "Top 3 Accuracy", "Top 1 Accuracy"});
    rows.push_back({envelope.at("encoder").get<std::string>(),
                    detail::rag_accuracy_cell(envelope, 3),
                    detail::rag_accuracy_cell(envelope, 1)});
    return detail::render_aligned(rows);
}

inline std::string render_rag_csv(const nlohmann::json& envelope) {
    std::ostringstream out;
    out << "Encoder,Top 3 Accuracy,Top 1 Accuracy\n";
    out << detail::csv_field(envelope.at("encoder").get<std::string>()) << ","
        << detail::rag_accuracy_cell(envelope, 3) << ","
        << detail::rag_accuracy_cell(envelope, 1) << "\n";
    return out.str();
}

inline void write_json_file(const std::filesystem::path& path,
                            const nlohmann::json& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    out << payload.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open: " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " +
                              e.what());
    }
}

} // namespace sembench
