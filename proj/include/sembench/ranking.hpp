#pragma once

// Exact cosine-similarity ranking over embedding vectors, plus the two
// reference baselines: averaged random permutations and the worst
// (ascending-grade) ordering. No ANN structures; candidate pools here are
// small and exact search is the point of comparison.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sembench/corpus.hpp"
#include "sembench/errors.hpp"
#include "sembench/metrics.hpp"
#include "sembench/rng.hpp"

namespace sembench {

struct EmbeddingRecord {
    std::string item_id;
    std::string model_id;
    std::vector<float> vector;
};

struct BaselineConfig {
    int samples = 30;
    std::uint64_t seed = 0;

    void validate() const {
        if (samples < 1) {
            throw ValidationError("baseline samples must be >= 1");
        }
    }
};

inline constexpr const char* kRandomRankingLabel = "Random Ranking";
inline constexpr const char* kWorstRankingLabel = "Worst Ranking";

inline double cosine_similarity(std::span<const float> a,
                                std::span<const float> b) {
    if (a.size() != b.size()) {
        throw ValidationError("cosine_similarity: dimension mismatch (" +
                              std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        norm_a += static_cast<double>(a[i]) * a[i];
        norm_b += static_cast<double>(b[i]) * b[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        throw ValidationError("cosine_similarity: zero vector");
    }
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

// Top-k candidates by descending cosine similarity to the query. Ties are
// broken by ascending doc id so rankings are reproducible.
inline RankedList rank_documents(const EmbeddingRecord& query,
                                 const std::vector<EmbeddingRecord>& candidates,
                                 int k) {
    if (k < 1) {
        throw ValidationError("rank_documents: k must be >= 1");
    }
    RankedList ranked;
    ranked.query_id = query.item_id;
    ranked.produced_by = query.model_id;
    ranked.entries.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (c.model_id != query.model_id) {
            throw ValidationError("rank_documents: mixed models (\"" +
                                  query.model_id + "\" vs \"" + c.model_id +
                                  "\" for item \"" + c.item_id + "\")");
        }
        ranked.entries.push_back(
            {c.item_id, cosine_similarity(query.vector, c.vector)});
    }
    std::sort(ranked.entries.begin(), ranked.entries.end(),
              [](const ScoredDoc& a, const ScoredDoc& b) {
                  if (a.score != b.score) {
                      return a.score > b.score;
                  }
                  return a.doc_id < b.doc_id;
              });
    if (ranked.entries.size() > static_cast<std::size_t>(k)) {
        ranked.entries.resize(static_cast<std::size_t>(k));
    }
    return ranked;
}

namespace detail {

// Judged doc ids for a query in ascending id order; the base list every
// baseline permutes or sorts.
inline std::vector<std::string>
judged_doc_ids(const JudgmentIndex& index, const std::string& query_id) {
    std::vector<std::string> ids;
    for (const auto& [doc_id, grade] : index.by_query().at(query_id)) {
        ids.push_back(doc_id);
    }
    return ids;
}

inline RankedList list_from_order(const std::string& query_id,
                                  const std::vector<std::string>& doc_ids,
                                  const std::string& label) {
    RankedList list;
    list.query_id = query_id;
    list.produced_by = label;
    list.entries.reserve(doc_ids.size());
    for (const auto& id : doc_ids) {
        list.entries.push_back({id, 0.0});
    }
    return list;
}

} // namespace detail

// Mean metrics over `samples` uniformly random permutations of each
// query's judged documents. Each (query, sample) permutation stream is
// derived from the seed independently, so the result does not depend on
// evaluation order. Per-query values in the returned report are means
// across samples; because means commute, the aggregates equal the mean of
// the per-sample aggregates.
inline MetricReport random_baseline(const BenchmarkDataset& dataset,
                                    const BaselineConfig& baseline_config,
                                    const MetricConfig& metric_config) {
    baseline_config.validate();
    metric_config.validate();
    const JudgmentIndex index(dataset.judgments);

    MetricReport accumulated;
    bool first_sample = true;
    for (int sample = 0; sample < baseline_config.samples; ++sample) {
        std::vector<RankedList> rankings;
        rankings.reserve(index.by_query().size());
        for (const auto& [query_id, docs] : index.by_query()) {
            auto ids = detail::judged_doc_ids(index, query_id);
            std::mt19937_64 rng(derive_stream_seed(
                baseline_config.seed, query_id, static_cast<std::uint64_t>(sample)));
            portable_shuffle(ids, rng);
            rankings.push_back(
                detail::list_from_order(query_id, ids, kRandomRankingLabel));
        }
        MetricReport r =
            evaluate_run(rankings, index, metric_config, kRandomRankingLabel);
        if (first_sample) {
            accumulated = std::move(r);
            first_sample = false;
        } else {
            for (auto& [query_id, m] : accumulated.per_query) {
                const auto& s = r.per_query.at(query_id);
                m.ndcg += s.ndcg;
                m.reciprocal_rank += s.reciprocal_rank;
                m.average_precision += s.average_precision;
            }
            accumulated.mean_ndcg += r.mean_ndcg;
            accumulated.mrr += r.mrr;
            accumulated.map += r.map;
        }
    }
    const double n = static_cast<double>(baseline_config.samples);
    for (auto& [query_id, m] : accumulated.per_query) {
        m.ndcg /= n;
        m.reciprocal_rank /= n;
        m.average_precision /= n;
    }
    accumulated.mean_ndcg /= n;
    accumulated.mrr /= n;
    accumulated.map /= n;
    accumulated.baseline = BaselineInfo{std::string(kPermutationRngId),
                                        baseline_config.seed,
                                        baseline_config.samples};
    return accumulated;
}

// Each query's judged documents in ascending grade order (ties by doc id):
// the ordering that provably minimizes nDCG and binarized AP, and pushes
// very-relevant documents last for reciprocal rank. Embeddings are never
// consulted.
inline MetricReport worst_ranking(const BenchmarkDataset& dataset,
                                  const MetricConfig& metric_config) {
    metric_config.validate();
    const JudgmentIndex index(dataset.judgments);
    std::vector<RankedList> rankings;
    rankings.reserve(index.by_query().size());
    for (const auto& [query_id, docs] : index.by_query()) {
        auto ids = detail::judged_doc_ids(index, query_id);
        const auto& grade_of = docs;
        std::stable_sort(ids.begin(), ids.end(),
                         [&grade_of](const std::string& a, const std::string& b) {
                             const int ga = grade_of.at(a);
                             const int gb = grade_of.at(b);
                             if (ga != gb) {
                                 return ga < gb;
                             }
                             return a < b;
                         });
        rankings.push_back(
            detail::list_from_order(query_id, ids, kWorstRankingLabel));
    }
    return evaluate_run(rankings, index, metric_config, kWorstRankingLabel);
}

inline std::vector<EmbeddingRecord>
load_embeddings_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open embeddings file: " + path.string());
    }
    std::vector<EmbeddingRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": malformed embedding record: " + e.what());
        }
        if (!obj.contains("id") || !obj.contains("model") ||
            !obj.contains("vector") || !obj["vector"].is_array()) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": embedding record needs id, model, vector");
        }
        EmbeddingRecord rec;
        rec.item_id = obj["id"].get<std::string>();
        rec.model_id = obj["model"].get<std::string>();
        rec.vector = obj["vector"].get<std::vector<float>>();
        bool all_zero = true;
        for (float v : rec.vector) {
            if (!std::isfinite(v)) {
                throw ValidationError(detail::loc(path, line_no) +
                                      ": non-finite component in vector for \"" +
                                      rec.item_id + "\"");
            }
            all_zero &= v == 0.0f;
        }
        if (rec.vector.empty() || all_zero) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": empty or all-zero vector for \"" +
                                  rec.item_id + "\"");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_embeddings_jsonl(const std::filesystem::path& path,
                                   const std::vector<EmbeddingRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    for (const auto& rec : records) {
        out << nlohmann::json{{"id", rec.item_id},
                              {"model", rec.model_id},
                              {"vector", rec.vector}}
                   .dump()
            << "\n";
    }
}

} // namespace sembench
