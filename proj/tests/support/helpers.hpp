#pragma once

// Shared fixture helpers for the test suites.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "sembench/corpus.hpp"
#include "sembench/metrics.hpp"

namespace testsupport {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<std::uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sembench_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const {
        return path_ / name;
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path,
                       const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// One query whose judged documents d1..dn carry `judged_grades`, ranked in
// `order` (indices into the judged set). Grade order in the ranking is
// judged_grades[order[i]].
struct SingleQueryFixture {
    std::vector<sembench::Judgment> judgments;
    sembench::RankedList ranking;
};

inline SingleQueryFixture
single_query(const std::vector<int>& judged_grades,
             const std::vector<std::size_t>& order,
             const std::string& query_id = "q1") {
    SingleQueryFixture fx;
    for (std::size_t i = 0; i < judged_grades.size(); ++i) {
        fx.judgments.push_back(
            {query_id, "d" + std::to_string(i + 1), judged_grades[i]});
    }
    fx.ranking.query_id = query_id;
    fx.ranking.produced_by = "test";
    for (std::size_t i : order) {
        fx.ranking.entries.push_back({"d" + std::to_string(i + 1), 0.0});
    }
    return fx;
}

// Ranking whose grade order equals `grades_in_order` over a judged set
// that is exactly those grades.
inline SingleQueryFixture
single_query_in_order(const std::vector<int>& grades_in_order,
                      const std::string& query_id = "q1") {
    std::vector<std::size_t> order(grades_in_order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    return single_query(grades_in_order, order, query_id);
}

inline sembench::RankedList
ideal_ranking(const std::string& query_id,
              const sembench::JudgmentIndex& index) {
    const auto& docs = index.by_query().at(query_id);
    std::vector<std::pair<std::string, int>> items(docs.begin(), docs.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second != b.second) {
                             return a.second > b.second;
                         }
                         return a.first < b.first;
                     });
    sembench::RankedList list;
    list.query_id = query_id;
    list.produced_by = "ideal";
    for (const auto& [doc_id, grade] : items) {
        list.entries.push_back({doc_id, 0.0});
    }
    return list;
}

inline std::vector<sembench::RankedList>
ideal_rankings(const sembench::JudgmentIndex& index) {
    std::vector<sembench::RankedList> lists;
    for (const auto& [query_id, docs] : index.by_query()) {
        lists.push_back(ideal_ranking(query_id, index));
    }
    return lists;
}

// Random multi-query dataset: grades drawn from {0,1,2}, a random ranking
// order per query. Used by oracle-equivalence and property tests.
struct RandomRun {
    std::vector<sembench::Judgment> judgments;
    std::vector<sembench::RankedList> rankings;
};

inline RandomRun random_run(std::mt19937_64& rng, int max_queries = 8,
                            int max_docs = 6) {
    RandomRun run;
    const int n_queries =
        1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_queries));
    for (int q = 0; q < n_queries; ++q) {
        const std::string query_id = "q" + std::to_string(q + 1);
        const int n_docs =
            1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_docs));
        std::vector<std::string> doc_ids;
        for (int d = 0; d < n_docs; ++d) {
            const std::string doc_id = "d" + std::to_string(d + 1);
            run.judgments.push_back(
                {query_id, doc_id, static_cast<int>(rng() % 3)});
            doc_ids.push_back(doc_id);
        }
        for (std::size_t i = doc_ids.size(); i > 1; --i) {
            std::swap(doc_ids[i - 1], doc_ids[rng() % i]);
        }
        sembench::RankedList list;
        list.query_id = query_id;
        list.produced_by = "random";
        for (const auto& id : doc_ids) {
            list.entries.push_back({id, 0.0});
        }
        run.rankings.push_back(std::move(list));
    }
    return run;
}

} // namespace testsupport
