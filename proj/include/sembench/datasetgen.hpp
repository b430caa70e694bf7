#pragma once

// LLM-driven benchmark synthesis: one search query plus graded labels per
// group of documents, paraphrase variants for FAQ questions, and the
// audit-sample export for manual review.
//
// The LLM must answer with machine-parseable JSON:
//   group query:  {"query": "...", "grades": [g per group member]}
//   variants:     {"variants": ["...", ...]}
// Responses that violate the structural invariants are re-prompted, never
// patched, so generated datasets satisfy the guarantees by construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sembench/chat.hpp"
#include "sembench/corpus.hpp"
#include "sembench/errors.hpp"
#include "sembench/hash.hpp"
#include "sembench/rng.hpp"

namespace sembench {

struct GenerationConfig {
    int group_size = 5;
    int variants_per_question = 3;
    ChatConfig generator;
    std::filesystem::path prompt_template_path;
    std::uint64_t seed = 0;
    int max_retries = 3; // re-prompts on invariant violations
    bool allow_remainder = false;

    void validate() const {
        if (group_size < 2) {
            throw ValidationError("group_size must be >= 2");
        }
        if (variants_per_question < 1) {
            throw ValidationError("variants_per_question must be >= 1");
        }
        if (max_retries < 0) {
            throw ValidationError("max_retries must be >= 0");
        }
    }
};

struct GradedMember {
    std::string doc_id;
    int relevance = 0;

    bool operator==(const GradedMember&) const = default;
};

struct GeneratedGroup {
    Query query;
    std::vector<GradedMember> members;
    std::string raw_response; // retained for audit
    int retry_count = 0;
};

inline constexpr const char* kLabelScale =
    "0 = irrelevant, 1 = somewhat relevant, 2 = very relevant";

// Rendering of a group for the {group_texts} placeholder. The "[DOC n]"
// markers double as the member count the offline synthetic client reads
// back out of the prompt.
inline std::string render_group_texts(const std::vector<Document>& group) {
    std::string out;
    for (std::size_t i = 0; i < group.size(); ++i) {
        out += "[DOC " + std::to_string(i + 1) + "]\n" + group[i].text + "\n\n";
    }
    return out;
}

inline int count_group_markers(const std::string& prompt) {
    int max_index = 0;
    std::size_t pos = 0;
    while ((pos = prompt.find("[DOC ", pos)) != std::string::npos) {
        pos += 5;
        int n = 0;
        while (pos < prompt.size() && prompt[pos] >= '0' && prompt[pos] <= '9') {
            n = n * 10 + (prompt[pos] - '0');
            ++pos;
        }
        if (pos < prompt.size() && prompt[pos] == ']') {
            max_index = std::max(max_index, n);
        }
    }
    return max_index;
}

struct PartitionResult {
    std::vector<std::vector<Document>> groups;
    std::vector<std::string> warnings;
};

// Seeded shuffle, then chunk. Every document lands in exactly one group.
inline PartitionResult partition_documents(const std::vector<Document>& docs,
                                           const GenerationConfig& config) {
    config.validate();
    const std::size_t group_size = static_cast<std::size_t>(config.group_size);
    if (docs.size() % group_size != 0 && !config.allow_remainder) {
        throw ValidationError(
            "document count " + std::to_string(docs.size()) +
            " is not divisible by group_size " + std::to_string(group_size) +
            " (pass allow_remainder to accept a short final group)");
    }
    std::vector<Document> shuffled = docs;
    std::mt19937_64 rng(derive_stream_seed(config.seed, "partition", 0));
    portable_shuffle(shuffled, rng);

    PartitionResult result;
    for (std::size_t start = 0; start < shuffled.size(); start += group_size) {
        const std::size_t end = std::min(shuffled.size(), start + group_size);
        result.groups.emplace_back(shuffled.begin() + static_cast<long>(start),
                                   shuffled.begin() + static_cast<long>(end));
    }
    if (!result.groups.empty() && result.groups.back().size() != group_size) {
        result.warnings.push_back(
            "final group has " + std::to_string(result.groups.back().size()) +
            " documents instead of " + std::to_string(group_size));
    }
    return result;
}

namespace detail {

inline std::optional<std::string>
check_group_response(const nlohmann::json& obj,
                     const std::vector<Document>& group,
                     GeneratedGroup& out) {
    if (!obj.contains("query") || !obj["query"].is_string() ||
        obj["query"].get<std::string>().empty()) {
        return "response lacks a non-empty \"query\" string";
    }
    if (!obj.contains("grades") || !obj["grades"].is_array()) {
        return "response lacks a \"grades\" array";
    }
    const auto& grades = obj["grades"];
    if (grades.size() != group.size()) {
        return "expected " + std::to_string(group.size()) + " grades, got " +
               std::to_string(grades.size());
    }
    bool has_very_relevant = false;
    std::vector<GradedMember> members;
    for (std::size_t i = 0; i < grades.size(); ++i) {
        if (!grades[i].is_number_integer()) {
            return "grade " + std::to_string(i + 1) + " is not an integer";
        }
        const int g = grades[i].get<int>();
        if (g < 0 || g > 2) {
            return "grade " + std::to_string(g) + " outside {0,1,2}";
        }
        has_very_relevant |= g == 2;
        members.push_back({group[i].id, g});
    }
    if (!has_very_relevant) {
        return "no member graded very relevant (2)";
    }
    out.query.text = obj["query"].get<std::string>();
    out.members = std::move(members);
    return std::nullopt;
}

} // namespace detail

// One LLM round per group: build the prompt, parse the response, validate
// the GeneratedGroup invariants, re-prompt on violation.
inline GeneratedGroup generate_group_query(const std::vector<Document>& group,
                                           const GenerationConfig& config,
                                           ChatClient& llm_client,
                                           const std::string& query_id) {
    config.validate();
    if (group.empty()) {
        throw ValidationError("cannot generate a query for an empty group");
    }
    const std::string tmpl =
        load_prompt_template(config.prompt_template_path, {"group_texts"});
    const std::string prompt =
        fill_template(tmpl, {{"group_texts", render_group_texts(group)},
                             {"label_scale", kLabelScale},
                             {"group_size", std::to_string(group.size())}});

    std::string last_problem;
    GeneratedGroup result;
    result.query.id = query_id;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        result.raw_response = llm_client.complete({{"user", prompt}});
        result.retry_count = attempt;
        auto obj = extract_json_object(result.raw_response);
        if (!obj) {
            last_problem = "no parseable JSON object in response";
            continue;
        }
        auto problem = detail::check_group_response(*obj, group, result);
        if (!problem) {
            return result;
        }
        last_problem = *problem;
    }
    throw GenerationError("group for query \"" + query_id + "\" failed after " +
                          std::to_string(config.max_retries + 1) +
                          " attempts: " + last_problem);
}

// Exactly variants_per_question paraphrases, each non-empty and distinct
// from the original and from one another (exact string comparison).
inline FaqEntry generate_question_variants(const FaqEntry& faq,
                                           const GenerationConfig& config,
                                           ChatClient& llm_client) {
    config.validate();
    if (!faq.variants.empty()) {
        throw ValidationError("faq \"" + faq.id + "\" already has variants");
    }
    const std::string tmpl =
        load_prompt_template(config.prompt_template_path, {"question"});
    const std::string prompt = fill_template(
        tmpl, {{"question", faq.question},
               {"count", std::to_string(config.variants_per_question)}});

    std::string last_problem;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        const std::string raw = llm_client.complete({{"user", prompt}});
        auto obj = extract_json_object(raw);
        if (!obj || !obj->contains("variants") || !(*obj)["variants"].is_array()) {
            last_problem = "no parseable {\"variants\": [...]} in response";
            continue;
        }
        const auto& arr = (*obj)["variants"];
        if (static_cast<int>(arr.size()) != config.variants_per_question) {
            last_problem = "expected " +
                           std::to_string(config.variants_per_question) +
                           " variants, got " + std::to_string(arr.size());
            continue;
        }
        std::vector<std::string> variants;
        std::set<std::string> seen{faq.question};
        bool ok = true;
        for (const auto& v : arr) {
            if (!v.is_string() || v.get<std::string>().empty()) {
                last_problem = "variant is empty or not a string";
                ok = false;
                break;
            }
            std::string text = v.get<std::string>();
            if (!seen.insert(text).second) {
                last_problem = "variant duplicates the original or another variant";
                ok = false;
                break;
            }
            variants.push_back(std::move(text));
        }
        if (ok) {
            FaqEntry out = faq;
            out.variants = std::move(variants);
            return out;
        }
    }
    throw GenerationError("variants for faq \"" + faq.id + "\" failed after " +
                          std::to_string(config.max_retries + 1) +
                          " attempts: " + last_problem);
}

// --- checkpointed dataset generation ----------------------------------

struct GenerationRun {
    BenchmarkDataset dataset;
    std::vector<GeneratedGroup> groups;
    std::vector<std::string> warnings;
};

namespace detail {

inline nlohmann::json group_to_json(std::size_t index, const GeneratedGroup& g) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : g.members) {
        members.push_back({{"doc_id", m.doc_id}, {"relevance", m.relevance}});
    }
    return {{"group_index", index},
            {"query_id", g.query.id},
            {"query_text", g.query.text},
            {"members", members},
            {"raw_response", g.raw_response},
            {"retry_count", g.retry_count}};
}

inline std::map<std::size_t, GeneratedGroup>
load_checkpoint(const std::filesystem::path& path) {
    std::map<std::size_t, GeneratedGroup> done;
    std::ifstream in(path);
    if (!in) {
        return done;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            break; // partial trailing write from an interrupted run
        }
        GeneratedGroup g;
        g.query.id = obj.at("query_id").get<std::string>();
        g.query.text = obj.at("query_text").get<std::string>();
        for (const auto& m : obj.at("members")) {
            g.members.push_back({m.at("doc_id").get<std::string>(),
                                 m.at("relevance").get<int>()});
        }
        g.raw_response = obj.value("raw_response", std::string{});
        g.retry_count = obj.value("retry_count", 0);
        done[obj.at("group_index").get<std::size_t>()] = std::move(g);
    }
    return done;
}

} // namespace detail

inline std::string make_query_id(std::size_t group_index) {
    std::string digits = std::to_string(group_index + 1);
    while (digits.size() < 4) {
        digits.insert(digits.begin(), '0');
    }
    return "q" + digits;
}

// Full search-dataset synthesis: partition, generate one labeled query per
// group, assemble documents + queries + qrels. Completed groups go to the
// checkpoint as they finish; an interrupted run resumed with the same seed
// produces the same dataset as an uninterrupted one, since groups are
// independent given the partition.
inline GenerationRun
generate_search_dataset(const std::vector<Document>& docs,
                        const GenerationConfig& config, ChatClient& llm_client,
                        const std::filesystem::path& checkpoint_path = {}) {
    config.validate();
    auto partition = partition_documents(docs, config);

    std::map<std::size_t, GeneratedGroup> done;
    std::ofstream checkpoint;
    if (!checkpoint_path.empty()) {
        done = detail::load_checkpoint(checkpoint_path);
        // Drop checkpoint entries that no longer match the partition.
        for (auto it = done.begin(); it != done.end();) {
            bool consistent = it->first < partition.groups.size() &&
                              it->second.members.size() ==
                                  partition.groups[it->first].size();
            if (consistent) {
                const auto& group = partition.groups[it->first];
                for (std::size_t i = 0; i < group.size(); ++i) {
                    consistent &= group[i].id == it->second.members[i].doc_id;
                }
            }
            it = consistent ? std::next(it) : done.erase(it);
        }
        std::ofstream rewrite(checkpoint_path, std::ios::binary | std::ios::trunc);
        for (const auto& [index, g] : done) {
            rewrite << detail::group_to_json(index, g).dump() << "\n";
        }
        rewrite.close();
        checkpoint.open(checkpoint_path,
                        std::ios::binary | std::ios::app);
    }

    GenerationRun run;
    run.warnings = partition.warnings;
    run.dataset.documents = docs;
    for (std::size_t index = 0; index < partition.groups.size(); ++index) {
        GeneratedGroup g;
        if (auto it = done.find(index); it != done.end()) {
            g = it->second;
        } else {
            g = generate_group_query(partition.groups[index], config, llm_client,
                                     make_query_id(index));
            if (checkpoint.is_open()) {
                checkpoint << detail::group_to_json(index, g).dump() << "\n";
                checkpoint.flush();
            }
        }
        run.dataset.queries.push_back(g.query);
        for (const auto& m : g.members) {
            run.dataset.judgments.push_back({g.query.id, m.doc_id, m.relevance});
        }
        run.groups.push_back(std::move(g));
    }
    return run;
}

// Samples ceil(fraction * query_count) whole query groups for manual
// review. TSV columns: query_id, query_text, doc_id, doc_text, grade,
// verdict (left empty for the reviewer).
inline void export_audit_sample(const BenchmarkDataset& dataset,
                                double fraction, std::uint64_t seed,
                                const std::filesystem::path& out_path) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ValidationError("audit fraction must be in (0, 1]");
    }
    std::vector<std::size_t> order(dataset.queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng(derive_stream_seed(seed, "audit", 0));
    portable_shuffle(order, rng);
    const std::size_t take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(dataset.queries.size())));
    order.resize(std::min(take, order.size()));
    std::sort(order.begin(), order.end());

    std::map<std::string, std::string> doc_text;
    for (const auto& d : dataset.documents) {
        doc_text[d.id] = d.text;
    }
    std::map<std::string, std::vector<const Judgment*>> by_query;
    for (const auto& j : dataset.judgments) {
        by_query[j.query_id].push_back(&j);
    }

    // Texts can contain tabs or newlines; flatten them so the TSV stays
    // one row per judgment.
    auto sanitize = [](std::string s) {
        for (char& c : s) {
            if (c == '\t' || c == '\n' || c == '\r') {
                c = ' ';
            }
        }
        return s;
    };

    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot open for writing: " + out_path.string());
    }
    out << "query_id\tquery_text\tdoc_id\tdoc_text\tgrade\tverdict\n";
    for (std::size_t qi : order) {
        const Query& q = dataset.queries[qi];
        auto it = by_query.find(q.id);
        if (it == by_query.end()) {
            continue;
        }
        for (const Judgment* j : it->second) {
            auto dit = doc_text.find(j->doc_id);
            out << q.id << "\t" << sanitize(q.text) << "\t" << j->doc_id << "\t"
                << sanitize(dit == doc_text.end() ? std::string{} : dit->second)
                << "\t" << j->relevance << "\t\n";
        }
    }
}

// --- offline synthetic clients -----------------------------------------

// Deterministic stand-ins for a hosted LLM; answers depend only on the
// prompt content, so checkpoint resume and repeated runs agree exactly.
// They enable network-free smoke runs of the generate pipeline.
inline CallbackChatClient make_synthetic_group_client() {
    return CallbackChatClient(
        "synthetic-generator", [](const std::vector<ChatMessage>& messages) {
            const std::string& prompt = messages.back().content;
            const int n = std::max(1, count_group_markers(prompt));
            const std::uint64_t h = fnv1a64(prompt);
            nlohmann::json grades = nlohmann::json::array();
            for (int i = 0; i < n; ++i) {
                grades.push_back(static_cast<int>((h >> (2 * (i % 16))) % 3));
            }
            grades[static_cast<std::size_t>(h % static_cast<std::uint64_t>(n))] = 2;
            return nlohmann::json{{"query", "synthetic query " + to_hex(h).substr(0, 8)},
                                  {"grades", grades}}
                .dump();
        });
}

inline CallbackChatClient make_synthetic_variants_client(int count) {
    return CallbackChatClient(
        "synthetic-generator",
        [count](const std::vector<ChatMessage>& messages) {
            const std::uint64_t h = fnv1a64(messages.back().content);
            nlohmann::json variants = nlohmann::json::array();
            for (int i = 0; i < count; ++i) {
                variants.push_back("synthetic variant " + std::to_string(i + 1) +
                                   " (" + to_hex(h).substr(0, 8) + ")");
            }
            return nlohmann::json{{"variants", variants}}.dump();
        });
}

} // namespace sembench
