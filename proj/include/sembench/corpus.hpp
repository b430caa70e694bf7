#pragma once

// Benchmark data model: documents, queries, graded judgments and FAQ
// entries, plus the JSONL/TSV loaders and writers.
//
// File formats (all UTF-8, LF):
//   documents.jsonl  {"id": "...", "text": "..."} per line
//   queries.jsonl    same shape
//   qrels.tsv        query_id<TAB>doc_id<TAB>relevance   (grades 0/1/2)
//   faq.jsonl        {"id","domain","question","answer","variants":[...]}

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "sembench/errors.hpp"

namespace sembench {

struct Document {
    std::string id;
    std::string text;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string id;
    std::string text;

    bool operator==(const Query&) const = default;
};

struct Judgment {
    std::string query_id;
    std::string doc_id;
    int relevance = 0; // 0 irrelevant, 1 somewhat relevant, 2 very relevant

    bool operator==(const Judgment&) const = default;
};

struct FaqEntry {
    std::string id;
    std::string domain;
    std::string question;
    std::string answer;
    std::vector<std::string> variants; // empty until generated

    bool operator==(const FaqEntry&) const = default;
};

struct BenchmarkDataset {
    std::vector<Document> documents;
    std::vector<Query> queries;
    std::vector<Judgment> judgments;

    bool operator==(const BenchmarkDataset&) const = default;
};

struct ValidationFinding {
    std::string message;

    bool operator==(const ValidationFinding&) const = default;
};

struct ValidationReport {
    std::vector<ValidationFinding> errors;
    std::vector<ValidationFinding> warnings;

    bool ok() const { return errors.empty(); }
    bool clean() const { return errors.empty() && warnings.empty(); }
};

namespace detail {

inline std::string loc(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

// Shared parser for the {"id","text"} JSONL files. Blank lines are
// skipped; anything else must be a valid object with both fields.
inline std::vector<std::pair<std::string, std::string>>
load_id_text_jsonl(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(std::string("cannot open ") + what + " file: " +
                              path.string());
    }
    std::vector<std::pair<std::string, std::string>> out;
    std::unordered_set<std::string> seen;
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
            throw ValidationError(loc(path, line_no) + ": malformed " + what +
                                  " record: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") ||
            !obj["id"].is_string() || !obj["text"].is_string()) {
            throw ValidationError(loc(path, line_no) + ": malformed " + what +
                                  " record: expected string fields id, text");
        }
        std::string id = obj["id"].get<std::string>();
        std::string text = obj["text"].get<std::string>();
        if (id.empty()) {
            throw ValidationError(loc(path, line_no) + ": empty " +
                                  std::string(what) + " id");
        }
        if (text.empty()) {
            throw ValidationError(loc(path, line_no) + ": empty text for " +
                                  std::string(what) + " \"" + id + "\"");
        }
        if (!seen.insert(id).second) {
            throw ValidationError(loc(path, line_no) + ": duplicate " + what +
                                  " id \"" + id + "\"");
        }
        out.emplace_back(std::move(id), std::move(text));
    }
    return out;
}

inline std::string json_line(const nlohmann::json& obj) {
    // Compact, sorted keys; keeps files byte-stable across runs.
    return obj.dump();
}

} // namespace detail

inline std::vector<Document> load_documents(const std::filesystem::path& path) {
    std::vector<Document> docs;
    for (auto& [id, text] : detail::load_id_text_jsonl(path, "document")) {
        docs.push_back({std::move(id), std::move(text)});
    }
    return docs;
}

inline std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    for (auto& [id, text] : detail::load_id_text_jsonl(path, "query")) {
        queries.push_back({std::move(id), std::move(text)});
    }
    return queries;
}

inline std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open qrels file: " + path.string());
    }
    std::vector<Judgment> judgments;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos
                                                : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": expected query_id<TAB>doc_id<TAB>relevance");
        }
        Judgment j;
        j.query_id = line.substr(0, t1);
        j.doc_id = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string grade_str = line.substr(t2 + 1);
        if (j.query_id.empty() || j.doc_id.empty()) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": empty query_id or doc_id");
        }
        const char* first = grade_str.data();
        const char* last = first + grade_str.size();
        auto [ptr, ec] = std::from_chars(first, last, j.relevance);
        if (ec != std::errc() || ptr != last) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": non-integer grade \"" + grade_str + "\"");
        }
        if (j.relevance < 0 || j.relevance > 2) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": grade out of range {0,1,2}: " + grade_str);
        }
        if (!seen.emplace(j.query_id, j.doc_id).second) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": duplicate judgment for (" + j.query_id +
                                  ", " + j.doc_id + ")");
        }
        judgments.push_back(std::move(j));
    }
    return judgments;
}

inline std::vector<FaqEntry> load_faqs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open faq file: " + path.string());
    }
    std::vector<FaqEntry> faqs;
    std::unordered_set<std::string> seen;
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
                                  ": malformed faq record: " + e.what());
        }
        FaqEntry f;
        for (const char* field : {"id", "domain", "question", "answer"}) {
            if (!obj.contains(field) || !obj[field].is_string()) {
                throw ValidationError(detail::loc(path, line_no) +
                                      ": faq record missing string field \"" +
                                      field + "\"");
            }
        }
        f.id = obj["id"].get<std::string>();
        f.domain = obj["domain"].get<std::string>();
        f.question = obj["question"].get<std::string>();
        f.answer = obj["answer"].get<std::string>();
        if (obj.contains("variants")) {
            if (!obj["variants"].is_array()) {
                throw ValidationError(detail::loc(path, line_no) +
                                      ": faq variants must be an array");
            }
            for (const auto& v : obj["variants"]) {
                if (!v.is_string() || v.get<std::string>().empty()) {
                    throw ValidationError(detail::loc(path, line_no) +
                                          ": faq variants must be non-empty strings");
                }
                f.variants.push_back(v.get<std::string>());
            }
        }
        if (f.id.empty() || f.domain.empty() || f.question.empty() ||
            f.answer.empty()) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": faq id, domain, question and answer must be non-empty");
        }
        if (!seen.insert(f.id).second) {
            throw ValidationError(detail::loc(path, line_no) +
                                  ": duplicate faq id \"" + f.id + "\"");
        }
        faqs.push_back(std::move(f));
    }
    return faqs;
}

inline void write_documents(const std::filesystem::path& path,
                            const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    for (const auto& d : docs) {
        out << detail::json_line({{"id", d.id}, {"text", d.text}}) << "\n";
    }
}

inline void write_queries(const std::filesystem::path& path,
                          const std::vector<Query>& queries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    for (const auto& q : queries) {
        out << detail::json_line({{"id", q.id}, {"text", q.text}}) << "\n";
    }
}

inline void write_judgments(const std::filesystem::path& path,
                            const std::vector<Judgment>& judgments) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    for (const auto& j : judgments) {
        out << j.query_id << "\t" << j.doc_id << "\t" << j.relevance << "\n";
    }
}

inline void write_faqs(const std::filesystem::path& path,
                       const std::vector<FaqEntry>& faqs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + path.string());
    }
    for (const auto& f : faqs) {
        out << detail::json_line({{"id", f.id},
                                  {"domain", f.domain},
                                  {"question", f.question},
                                  {"answer", f.answer},
                                  {"variants", f.variants}})
            << "\n";
    }
}

// Cross-checks the three collections. Referential problems are errors;
// paper-conformance checks (exactly five judged documents per query, at
// least one very-relevant document) are warnings so general datasets
// still evaluate.
inline ValidationReport validate_benchmark(const std::vector<Document>& docs,
                                           const std::vector<Query>& queries,
                                           const std::vector<Judgment>& judgments) {
    ValidationReport report;
    std::unordered_set<std::string> doc_ids;
    std::unordered_set<std::string> query_ids;
    for (const auto& d : docs) {
        doc_ids.insert(d.id);
    }
    for (const auto& q : queries) {
        query_ids.insert(q.id);
    }

    std::map<std::string, std::vector<int>> grades_by_query;
    for (const auto& j : judgments) {
        if (!query_ids.count(j.query_id)) {
            report.errors.push_back({"judgment (" + j.query_id + ", " + j.doc_id +
                                     ") references unknown query \"" +
                                     j.query_id + "\""});
        }
        if (!doc_ids.count(j.doc_id)) {
            report.errors.push_back({"judgment (" + j.query_id + ", " + j.doc_id +
                                     ") references unknown document \"" +
                                     j.doc_id + "\""});
        }
        grades_by_query[j.query_id].push_back(j.relevance);
    }

    // Iterate queries in input order so findings are stable.
    for (const auto& q : queries) {
        auto it = grades_by_query.find(q.id);
        if (it == grades_by_query.end()) {
            report.errors.push_back({"query \"" + q.id + "\" has no judgments"});
            continue;
        }
        const auto& grades = it->second;
        if (grades.size() != 5) {
            report.warnings.push_back({"query \"" + q.id + "\" has " +
                                       std::to_string(grades.size()) +
                                       " judged documents (paper protocol uses 5)"});
        }
        bool has_very_relevant = false;
        for (int g : grades) {
            if (g == 2) {
                has_very_relevant = true;
                break;
            }
        }
        if (!has_very_relevant) {
            report.warnings.push_back({"no very-relevant document for \"" +
                                       q.id + "\""});
        }
    }
    return report;
}

inline ValidationReport validate_benchmark(const BenchmarkDataset& ds) {
    return validate_benchmark(ds.documents, ds.queries, ds.judgments);
}

} // namespace sembench
