#pragma once

// Graded-relevance ranking metrics at cutoff k.
//
//   DCG@k   = sum_{i=1..k} (2^rel_i - 1) / log2(i + 1)
//   nDCG@k  = DCG@k / IDCG@k, IDCG from the judged set in descending grade
//   RR@k    = 1 / rank of the first very-relevant document in the top k
//   AP@k    = sum_{i=1..min(k,n)} P(i) * rel_i / #relevant judged docs
//
// AP has two readings of rel_i: `paper_literal` keeps the raw grade (so AP
// can exceed 1), `binarized` uses the usual 0/1 indicator. Both are exact
// implementations; the report records which one was used.
//
// All functions are pure. Aggregation always walks queries in sorted-id
// order so results are bitwise reproducible regardless of input ordering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sembench/corpus.hpp"
#include "sembench/errors.hpp"

namespace sembench {

enum class ApMode {
    binarized,     // rel_i in {0,1}; standard IR reading
    paper_literal, // rel_i is the raw grade in {0,1,2}
};

inline const char* to_string(ApMode mode) {
    return mode == ApMode::binarized ? "binarized" : "paper_literal";
}

inline ApMode ap_mode_from_string(const std::string& s) {
    if (s == "binarized") {
        return ApMode::binarized;
    }
    if (s == "paper_literal") {
        return ApMode::paper_literal;
    }
    throw ValidationError("unknown ap_mode \"" + s + "\"");
}

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries; // index 0 = rank 1
    std::string produced_by;
};

struct MetricConfig {
    int k = 3;
    ApMode ap_mode = ApMode::binarized;
    int very_relevant_grade = 2; // grade that counts for reciprocal rank
    int relevant_threshold = 0;  // strictly-above threshold for P(k) and AP

    void validate() const {
        if (k < 1) {
            throw ValidationError("metric cutoff k must be >= 1");
        }
        if (very_relevant_grade < 0 || very_relevant_grade > 2) {
            throw ValidationError("very_relevant_grade must be in {0,1,2}");
        }
        if (relevant_threshold < 0 || relevant_threshold > 1) {
            throw ValidationError("relevant_threshold must be in {0,1}");
        }
    }
};

struct PerQueryMetrics {
    double ndcg = 0.0;
    double reciprocal_rank = 0.0;
    double average_precision = 0.0;
};

// Present on baseline reports: which permutation scheme produced them.
struct BaselineInfo {
    std::string rng;
    std::uint64_t seed = 0;
    int samples = 0;
};

struct MetricReport {
    std::string run_label;
    int k = 0;
    ApMode ap_mode = ApMode::binarized;
    std::map<std::string, PerQueryMetrics> per_query;
    double mean_ndcg = 0.0;
    double mrr = 0.0;
    double map = 0.0;
    std::vector<std::string> zero_idcg_queries;
    std::vector<std::string> zero_relevant_queries;
    std::optional<int> embedding_dim;
    std::optional<BaselineInfo> baseline;
};

// Judgments regrouped per query, with deterministic (sorted) iteration.
class JudgmentIndex {
public:
    explicit JudgmentIndex(const std::vector<Judgment>& judgments) {
        for (const auto& j : judgments) {
            if (j.relevance < 0 || j.relevance > 2) {
                throw ValidationError("judgment grade out of range {0,1,2} for (" +
                                      j.query_id + ", " + j.doc_id + ")");
            }
            auto [it, inserted] =
                by_query_[j.query_id].emplace(j.doc_id, j.relevance);
            if (!inserted) {
                throw ValidationError("duplicate judgment for (" + j.query_id +
                                      ", " + j.doc_id + ")");
            }
        }
    }

    const std::map<std::string, std::map<std::string, int>>& by_query() const {
        return by_query_;
    }

    bool has_query(const std::string& query_id) const {
        return by_query_.count(query_id) > 0;
    }

    // Grades of a ranked list in rank order. Unjudged documents are an
    // error: the benchmark protocol judges every document in a query's
    // group, so a missing grade indicates a wiring bug, not grade 0.
    std::vector<int> grades_in_rank_order(const RankedList& ranking) const {
        auto qit = by_query_.find(ranking.query_id);
        if (qit == by_query_.end()) {
            throw ValidationError("no judgments for query \"" +
                                  ranking.query_id + "\"");
        }
        std::vector<int> grades;
        grades.reserve(ranking.entries.size());
        std::set<std::string> seen;
        for (const auto& entry : ranking.entries) {
            if (!seen.insert(entry.doc_id).second) {
                throw ValidationError("document \"" + entry.doc_id +
                                      "\" appears twice in ranking for query \"" +
                                      ranking.query_id + "\"");
            }
            auto dit = qit->second.find(entry.doc_id);
            if (dit == qit->second.end()) {
                throw ValidationError("unjudged document \"" + entry.doc_id +
                                      "\" in ranking for query \"" +
                                      ranking.query_id + "\"");
            }
            grades.push_back(dit->second);
        }
        return grades;
    }

    std::vector<int> judged_grades(const std::string& query_id) const {
        auto qit = by_query_.find(query_id);
        if (qit == by_query_.end()) {
            throw ValidationError("no judgments for query \"" + query_id + "\"");
        }
        std::vector<int> grades;
        grades.reserve(qit->second.size());
        for (const auto& [doc_id, grade] : qit->second) {
            grades.push_back(grade);
        }
        return grades;
    }

private:
    std::map<std::string, std::map<std::string, int>> by_query_;
};

inline double dcg_at_k(std::span<const int> gains, int k) {
    if (k < 1) {
        throw ValidationError("dcg_at_k: k must be >= 1");
    }
    double total = 0.0;
    const std::size_t n = std::min<std::size_t>(gains.size(),
                                                static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const int grade = gains[i];
        if (grade < 0 || grade > 2) {
            throw ValidationError("dcg_at_k: grade out of range {0,1,2}");
        }
        const double gain = static_cast<double>((1 << grade) - 1);
        total += gain / std::log2(static_cast<double>(i) + 2.0);
    }
    return total;
}

namespace detail {

inline double ideal_dcg_at_k(std::vector<int> judged_grades, int k) {
    std::sort(judged_grades.begin(), judged_grades.end(),
              [](int a, int b) { return a > b; });
    return dcg_at_k(judged_grades, k);
}

} // namespace detail

// Zero IDCG (no judged document with positive grade) yields 0 rather than
// excluding the query, so |Q| stays fixed across runs.
inline double ndcg_at_k(const RankedList& ranking, const JudgmentIndex& index,
                        const MetricConfig& config) {
    config.validate();
    const auto gains = index.grades_in_rank_order(ranking);
    const double idcg =
        detail::ideal_dcg_at_k(index.judged_grades(ranking.query_id), config.k);
    if (idcg == 0.0) {
        return 0.0;
    }
    return dcg_at_k(gains, config.k) / idcg;
}

inline double reciprocal_rank_at_k(const RankedList& ranking,
                                   const JudgmentIndex& index,
                                   const MetricConfig& config) {
    config.validate();
    const auto gains = index.grades_in_rank_order(ranking);
    const std::size_t n = std::min<std::size_t>(gains.size(),
                                                static_cast<std::size_t>(config.k));
    for (std::size_t i = 0; i < n; ++i) {
        if (gains[i] == config.very_relevant_grade) {
            return 1.0 / (static_cast<double>(i) + 1.0);
        }
    }
    return 0.0;
}

inline double average_precision_at_k(const RankedList& ranking,
                                     const JudgmentIndex& index,
                                     const MetricConfig& config) {
    config.validate();
    const auto gains = index.grades_in_rank_order(ranking);
    int relevant_judged = 0;
    for (int g : index.judged_grades(ranking.query_id)) {
        if (g > config.relevant_threshold) {
            ++relevant_judged;
        }
    }
    if (relevant_judged == 0) {
        return 0.0;
    }
    double total = 0.0;
    int hits = 0;
    const std::size_t n = std::min<std::size_t>(gains.size(),
                                                static_cast<std::size_t>(config.k));
    for (std::size_t i = 0; i < n; ++i) {
        const int grade = gains[i];
        if (grade > config.relevant_threshold) {
            ++hits;
        }
        const double rel = config.ap_mode == ApMode::binarized
                               ? (grade > config.relevant_threshold ? 1.0 : 0.0)
                               : static_cast<double>(grade);
        if (rel != 0.0) {
            total += (static_cast<double>(hits) / (static_cast<double>(i) + 1.0)) * rel;
        }
    }
    return total / static_cast<double>(relevant_judged);
}

namespace detail {

// One ranking per judged query, no strays, no duplicates. Returns rankings
// keyed by query id for sorted traversal.
inline std::map<std::string, const RankedList*>
check_run_coverage(const std::vector<RankedList>& rankings,
                   const JudgmentIndex& index) {
    std::map<std::string, const RankedList*> by_query;
    for (const auto& r : rankings) {
        if (!index.has_query(r.query_id)) {
            throw ValidationError("ranking for unknown query \"" + r.query_id +
                                  "\"");
        }
        if (!by_query.emplace(r.query_id, &r).second) {
            throw ValidationError("more than one ranking for query \"" +
                                  r.query_id + "\"");
        }
    }
    for (const auto& [query_id, docs] : index.by_query()) {
        if (!by_query.count(query_id)) {
            throw ValidationError("missing ranking for judged query \"" +
                                  query_id + "\"");
        }
    }
    return by_query;
}

} // namespace detail

inline double mrr_at_k(const std::vector<RankedList>& rankings,
                       const JudgmentIndex& index, const MetricConfig& config) {
    config.validate();
    const auto by_query = detail::check_run_coverage(rankings, index);
    if (by_query.empty()) {
        throw ValidationError("no queries");
    }
    double total = 0.0;
    for (const auto& [query_id, ranking] : by_query) {
        total += reciprocal_rank_at_k(*ranking, index, config);
    }
    return total / static_cast<double>(by_query.size());
}

inline double map_at_k(const std::vector<RankedList>& rankings,
                       const JudgmentIndex& index, const MetricConfig& config) {
    config.validate();
    const auto by_query = detail::check_run_coverage(rankings, index);
    if (by_query.empty()) {
        throw ValidationError("no queries");
    }
    double total = 0.0;
    for (const auto& [query_id, ranking] : by_query) {
        total += average_precision_at_k(*ranking, index, config);
    }
    return total / static_cast<double>(by_query.size());
}

inline MetricReport evaluate_run(const std::vector<RankedList>& rankings,
                                 const JudgmentIndex& index,
                                 const MetricConfig& config,
                                 std::string run_label) {
    config.validate();
    const auto by_query = detail::check_run_coverage(rankings, index);
    if (by_query.empty()) {
        throw ValidationError("no queries");
    }

    MetricReport report;
    report.run_label = std::move(run_label);
    report.k = config.k;
    report.ap_mode = config.ap_mode;

    double ndcg_sum = 0.0;
    double rr_sum = 0.0;
    double ap_sum = 0.0;
    for (const auto& [query_id, ranking] : by_query) {
        PerQueryMetrics m;
        m.ndcg = ndcg_at_k(*ranking, index, config);
        m.reciprocal_rank = reciprocal_rank_at_k(*ranking, index, config);
        m.average_precision = average_precision_at_k(*ranking, index, config);
        ndcg_sum += m.ndcg;
        rr_sum += m.reciprocal_rank;
        ap_sum += m.average_precision;
        report.per_query.emplace(query_id, m);

        const auto judged = index.judged_grades(query_id);
        bool any_positive = false;
        bool any_relevant = false;
        for (int g : judged) {
            any_positive |= g > 0;
            any_relevant |= g > config.relevant_threshold;
        }
        if (!any_positive) {
            report.zero_idcg_queries.push_back(query_id);
        }
        if (!any_relevant) {
            report.zero_relevant_queries.push_back(query_id);
        }
    }
    const double n = static_cast<double>(by_query.size());
    report.mean_ndcg = ndcg_sum / n;
    report.mrr = rr_sum / n;
    report.map = ap_sum / n;
    return report;
}

inline MetricReport evaluate_run(const std::vector<RankedList>& rankings,
                                 const std::vector<Judgment>& judgments,
                                 const MetricConfig& config,
                                 std::string run_label) {
    return evaluate_run(rankings, JudgmentIndex(judgments), config,
                        std::move(run_label));
}

inline nlohmann::json to_json(const MetricReport& report) {
    nlohmann::json per_query = nlohmann::json::object();
    for (const auto& [query_id, m] : report.per_query) {
        per_query[query_id] = {{"ndcg", m.ndcg},
                               {"reciprocal_rank", m.reciprocal_rank},
                               {"average_precision", m.average_precision}};
    }
    nlohmann::json j = {
        {"run_label", report.run_label},
        {"k", report.k},
        {"ap_mode", to_string(report.ap_mode)},
        {"aggregates",
         {{"ndcg", report.mean_ndcg}, {"mrr", report.mrr}, {"map", report.map}}},
        {"per_query", per_query},
        {"flags",
         {{"zero_idcg", report.zero_idcg_queries},
          {"zero_relevant", report.zero_relevant_queries}}},
    };
    if (report.embedding_dim) {
        j["embedding_dim"] = *report.embedding_dim;
    }
    if (report.baseline) {
        j["baseline"] = {{"rng", report.baseline->rng},
                         {"seed", report.baseline->seed},
                         {"samples", report.baseline->samples}};
    }
    return j;
}

inline MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport report;
    report.run_label = j.at("run_label").get<std::string>();
    report.k = j.at("k").get<int>();
    report.ap_mode = ap_mode_from_string(j.at("ap_mode").get<std::string>());
    report.mean_ndcg = j.at("aggregates").at("ndcg").get<double>();
    report.mrr = j.at("aggregates").at("mrr").get<double>();
    report.map = j.at("aggregates").at("map").get<double>();
    for (const auto& [query_id, m] : j.at("per_query").items()) {
        PerQueryMetrics pq;
        pq.ndcg = m.at("ndcg").get<double>();
        pq.reciprocal_rank = m.at("reciprocal_rank").get<double>();
        pq.average_precision = m.at("average_precision").get<double>();
        report.per_query.emplace(query_id, pq);
    }
    report.zero_idcg_queries =
        j.at("flags").at("zero_idcg").get<std::vector<std::string>>();
    report.zero_relevant_queries =
        j.at("flags").at("zero_relevant").get<std::vector<std::string>>();
    if (j.contains("embedding_dim")) {
        report.embedding_dim = j.at("embedding_dim").get<int>();
    }
    if (j.contains("baseline")) {
        BaselineInfo info;
        info.rng = j.at("baseline").at("rng").get<std::string>();
        info.seed = j.at("baseline").at("seed").get<std::uint64_t>();
        info.samples = j.at("baseline").at("samples").get<int>();
        report.baseline = info;
    }
    return report;
}

} // namespace sembench
