#pragma once

// Four-stage retrieval-augmented-generation evaluation:
//   1. retrieve the semantically closest ground-truth questions within the
//      variant's domain (exact cosine, never across domains)
//   2. generate an answer from the retrieved questions' answers
//   3. judge the generated answer against the ground truth
//      (strict final-line protocol: "VERDICT: CORRECT" / "VERDICT: INCORRECT")
//   4. aggregate accuracy overall and per domain
//
// Every evaluated variant is persisted to a JSONL record log, which replay
// mode turns back into a bit-identical report without touching any client.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sembench/chat.hpp"
#include "sembench/corpus.hpp"
#include "sembench/encoder_gateway.hpp"
#include "sembench/errors.hpp"
#include "sembench/hash.hpp"
#include "sembench/ranking.hpp"

namespace sembench {

struct RagConfig {
    int retrieval_k = 3;
    EncoderConfig encoder;
    ChatConfig generator;
    ChatConfig judge;
    std::filesystem::path answer_template_path;
    std::filesystem::path judge_template_path;
    double failure_budget = 0.1; // abort when failed > budget * variants
    int reprompt_retries = 2;    // re-asks on empty answers / missing verdicts

    void validate() const {
        if (retrieval_k < 1) {
            throw ValidationError("retrieval_k must be >= 1");
        }
        if (failure_budget < 0.0 || failure_budget > 1.0) {
            throw ValidationError("failure_budget must be in [0, 1]");
        }
        if (reprompt_retries < 0) {
            throw ValidationError("reprompt_retries must be >= 0");
        }
    }
};

enum class Verdict { correct, incorrect };

inline const char* to_string(Verdict v) {
    return v == Verdict::correct ? "correct" : "incorrect";
}

struct RetrievedMatch {
    std::string faq_id;
    double similarity = 0.0;
};

struct RagRecord {
    int variant_index = 0;
    std::string variant_query;
    std::string source_faq_id;
    std::string domain;
    std::vector<RetrievedMatch> retrieved;
    std::string generated_answer;
    Verdict verdict = Verdict::incorrect;
    std::string judge_raw;
    // Digests of the exact prompts sent, for cost auditing and replay
    // cross-checks; the responses themselves live in generated_answer
    // and judge_raw.
    std::string generator_request_digest;
    std::string judge_request_digest;
};

struct DomainStats {
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;
};

struct RagReport {
    nlohmann::json config_echo;
    int total = 0;   // variants evaluated end to end
    int correct = 0;
    int failed = 0;  // variants lost to client failures (within budget)
    double overall_accuracy = 0.0;
    std::map<std::string, DomainStats> per_domain;
};

// Rank the domain's ground-truth questions against an embedded variant.
// The precomputed question embeddings must all share one model.
inline std::vector<RetrievedMatch>
retrieve_context(const std::string& variant_query,
                 const std::vector<EmbeddingRecord>& domain_question_embeddings,
                 Embedder& embedder, int retrieval_k) {
    if (domain_question_embeddings.empty()) {
        throw ValidationError("retrieve_context: empty domain");
    }
    EmbeddingRecord query_emb;
    query_emb.item_id = "__query__";
    query_emb.model_id = embedder.model_id();
    query_emb.vector = get_or_embed({variant_query}, embedder, nullptr).front();
    RankedList ranked =
        rank_documents(query_emb, domain_question_embeddings, retrieval_k);
    std::vector<RetrievedMatch> matches;
    matches.reserve(ranked.entries.size());
    for (const auto& e : ranked.entries) {
        matches.push_back({e.doc_id, e.score});
    }
    return matches;
}

// Convenience overload that embeds the domain questions on the fly.
inline std::vector<RetrievedMatch>
retrieve_context(const std::string& variant_query,
                 const std::vector<FaqEntry>& faqs_in_domain, Embedder& embedder,
                 int retrieval_k) {
    if (faqs_in_domain.empty()) {
        throw ValidationError("retrieve_context: empty domain");
    }
    std::vector<std::string> questions;
    questions.reserve(faqs_in_domain.size());
    for (const auto& f : faqs_in_domain) {
        questions.push_back(f.question);
    }
    auto vectors = embedder.embed_batch(questions);
    std::vector<EmbeddingRecord> embeddings;
    embeddings.reserve(faqs_in_domain.size());
    for (std::size_t i = 0; i < faqs_in_domain.size(); ++i) {
        embeddings.push_back(
            {faqs_in_domain[i].id, embedder.model_id(), std::move(vectors[i])});
    }
    return retrieve_context(variant_query, embeddings, embedder, retrieval_k);
}

inline std::string render_context_answers(
    const std::vector<RetrievedMatch>& matches,
    const std::map<std::string, const FaqEntry*>& faq_by_id) {
    std::string out;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        auto it = faq_by_id.find(matches[i].faq_id);
        if (it == faq_by_id.end()) {
            throw ValidationError("retrieved unknown faq id \"" +
                                  matches[i].faq_id + "\"");
        }
        out += "[ANSWER " + std::to_string(i + 1) + "]\n" +
               it->second->answer + "\n\n";
    }
    return out;
}

// The prompt carries the retrieved questions' answers (not the question
// texts): the generator synthesizes from knowledge, it does not re-rank.
inline std::string
generate_answer(const std::string& variant_query,
                const std::vector<RetrievedMatch>& matches,
                const std::map<std::string, const FaqEntry*>& faq_by_id,
                const std::string& answer_template, ChatClient& generator,
                int reprompt_retries, std::string* request_digest = nullptr) {
    if (matches.empty()) {
        throw ValidationError("generate_answer: no retrieved context");
    }
    const std::string prompt = fill_template(
        answer_template, {{"query", variant_query},
                          {"contexts", render_context_answers(matches, faq_by_id)}});
    if (request_digest) {
        *request_digest = "fnv1a64:" + to_hex(fnv1a64(prompt));
    }
    for (int attempt = 0; attempt <= reprompt_retries; ++attempt) {
        std::string completion = generator.complete({{"user", prompt}});
        if (!completion.empty()) {
            return completion;
        }
    }
    throw GenerationError("generator returned empty completions for query \"" +
                          variant_query + "\"");
}

inline std::optional<Verdict> parse_verdict(const std::string& completion) {
    std::optional<Verdict> latest;
    std::size_t line_start = 0;
    while (line_start <= completion.size()) {
        std::size_t line_end = completion.find('\n', line_start);
        if (line_end == std::string::npos) {
            line_end = completion.size();
        }
        std::string line = completion.substr(line_start, line_end - line_start);
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const auto pos = line.find("verdict:");
        if (pos != std::string::npos) {
            std::size_t cursor = pos + 8;
            while (cursor < line.size() &&
                   std::isspace(static_cast<unsigned char>(line[cursor]))) {
                ++cursor;
            }
            if (line.compare(cursor, 9, "incorrect") == 0) {
                latest = Verdict::incorrect;
            } else if (line.compare(cursor, 7, "correct") == 0) {
                latest = Verdict::correct;
            }
        }
        line_start = line_end + 1;
    }
    return latest;
}

struct JudgeResult {
    Verdict verdict = Verdict::incorrect;
    std::string raw;
    int retry_count = 0;
    std::string request_digest;
};

inline JudgeResult judge_answer(const std::string& variant_query,
                                const std::string& generated,
                                const std::string& ground_truth_answer,
                                const std::string& judge_template,
                                ChatClient& judge, int reprompt_retries) {
    if (variant_query.empty() || generated.empty() ||
        ground_truth_answer.empty()) {
        throw ValidationError("judge_answer: query, generated answer and "
                              "ground truth must be non-empty");
    }
    const std::string prompt =
        fill_template(judge_template, {{"query", variant_query},
                                       {"generated_answer", generated},
                                       {"ground_truth_answer", ground_truth_answer}});
    JudgeResult result;
    result.request_digest = "fnv1a64:" + to_hex(fnv1a64(prompt));
    for (int attempt = 0; attempt <= reprompt_retries; ++attempt) {
        result.raw = judge.complete({{"user", prompt}});
        result.retry_count = attempt;
        if (auto verdict = parse_verdict(result.raw)) {
            result.verdict = *verdict;
            return result;
        }
    }
    throw GenerationError("judge produced no parseable verdict after " +
                          std::to_string(reprompt_retries + 1) + " attempts");
}

inline double compute_accuracy(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) {
        throw ValidationError("compute_accuracy: no verdicts");
    }
    int correct = 0;
    for (Verdict v : verdicts) {
        correct += v == Verdict::correct ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

// --- record log ---------------------------------------------------------

namespace detail {

inline nlohmann::json record_to_json(const RagRecord& r) {
    nlohmann::json retrieved = nlohmann::json::array();
    for (const auto& m : r.retrieved) {
        retrieved.push_back({{"faq_id", m.faq_id}, {"similarity", m.similarity}});
    }
    return {{"type", "record"},
            {"variant_index", r.variant_index},
            {"variant_query", r.variant_query},
            {"source_faq_id", r.source_faq_id},
            {"domain", r.domain},
            {"retrieved", retrieved},
            {"generated_answer", r.generated_answer},
            {"verdict", to_string(r.verdict)},
            {"judge_raw", r.judge_raw},
            {"generator_request_digest", r.generator_request_digest},
            {"judge_request_digest", r.judge_request_digest}};
}

inline RagRecord record_from_json(const nlohmann::json& j) {
    RagRecord r;
    r.variant_index = j.at("variant_index").get<int>();
    r.variant_query = j.at("variant_query").get<std::string>();
    r.source_faq_id = j.at("source_faq_id").get<std::string>();
    r.domain = j.at("domain").get<std::string>();
    for (const auto& m : j.at("retrieved")) {
        r.retrieved.push_back({m.at("faq_id").get<std::string>(),
                               m.at("similarity").get<double>()});
    }
    r.generated_answer = j.at("generated_answer").get<std::string>();
    const std::string verdict = j.at("verdict").get<std::string>();
    if (verdict != "correct" && verdict != "incorrect") {
        throw ValidationError("record log verdict must be correct|incorrect");
    }
    r.verdict = verdict == "correct" ? Verdict::correct : Verdict::incorrect;
    r.judge_raw = j.at("judge_raw").get<std::string>();
    r.generator_request_digest = j.value("generator_request_digest", std::string{});
    r.judge_request_digest = j.value("judge_request_digest", std::string{});
    return r;
}

inline RagReport report_from_records(const nlohmann::json& config_echo,
                                     const std::vector<RagRecord>& records,
                                     int failed) {
    RagReport report;
    report.config_echo = config_echo;
    report.failed = failed;
    for (const auto& r : records) {
        auto& stats = report.per_domain[r.domain];
        ++stats.total;
        ++report.total;
        if (r.verdict == Verdict::correct) {
            ++stats.correct;
            ++report.correct;
        }
    }
    for (auto& [domain, stats] : report.per_domain) {
        stats.accuracy = static_cast<double>(stats.correct) /
                         static_cast<double>(stats.total);
    }
    if (report.total > 0) {
        report.overall_accuracy = static_cast<double>(report.correct) /
                                  static_cast<double>(report.total);
    }
    return report;
}

} // namespace detail

inline nlohmann::json to_json(const RagReport& report) {
    nlohmann::json per_domain = nlohmann::json::object();
    for (const auto& [domain, stats] : report.per_domain) {
        per_domain[domain] = {{"total", stats.total},
                              {"correct", stats.correct},
                              {"accuracy", stats.accuracy}};
    }
    return {{"config", report.config_echo},
            {"counts",
             {{"total", report.total},
              {"correct", report.correct},
              {"failed", report.failed}}},
            {"overall_accuracy", report.overall_accuracy},
            {"per_domain", per_domain}};
}

// Runs the full pipeline over every variant of every FAQ, in (domain,
// faq id, variant index) order. Each evaluated variant is appended to the
// record log before the next one starts; client failures burn the failure
// budget and abort the run once exceeded, leaving the partial log behind.
inline RagReport run_rag_eval(const std::vector<FaqEntry>& faqs,
                              const RagConfig& config, Embedder& embedder,
                              ChatClient& generator, ChatClient& judge,
                              const std::filesystem::path& record_log_path) {
    config.validate();
    if (faqs.empty()) {
        throw ValidationError("run_rag_eval: no FAQ entries");
    }
    for (const auto& f : faqs) {
        if (f.variants.empty()) {
            throw ValidationError("faq \"" + f.id +
                                  "\" has no variants; generate them first");
        }
    }
    const std::string answer_template = load_prompt_template(
        config.answer_template_path, {"query", "contexts"});
    const std::string judge_template = load_prompt_template(
        config.judge_template_path,
        {"query", "generated_answer", "ground_truth_answer"});

    std::vector<const FaqEntry*> ordered;
    ordered.reserve(faqs.size());
    std::map<std::string, const FaqEntry*> faq_by_id;
    std::map<std::string, std::vector<const FaqEntry*>> by_domain;
    for (const auto& f : faqs) {
        ordered.push_back(&f);
        faq_by_id[f.id] = &f;
        by_domain[f.domain].push_back(&f);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const FaqEntry* a, const FaqEntry* b) {
                  return std::tie(a->domain, a->id) < std::tie(b->domain, b->id);
              });

    // One embedding pass per domain's ground-truth questions.
    std::map<std::string, std::vector<EmbeddingRecord>> domain_embeddings;
    for (auto& [domain, entries] : by_domain) {
        std::sort(entries.begin(), entries.end(),
                  [](const FaqEntry* a, const FaqEntry* b) {
                      return a->id < b->id;
                  });
        std::vector<std::string> questions;
        questions.reserve(entries.size());
        for (const FaqEntry* f : entries) {
            questions.push_back(f->question);
        }
        auto vectors = embedder.embed_batch(questions);
        auto& records = domain_embeddings[domain];
        for (std::size_t i = 0; i < entries.size(); ++i) {
            records.push_back(
                {entries[i]->id, embedder.model_id(), std::move(vectors[i])});
        }
    }

    nlohmann::json config_echo = {
        {"retrieval_k", config.retrieval_k},
        {"encoder_model", embedder.model_id()},
        {"generator_model", generator.model()},
        {"judge_model", judge.model()},
        {"failure_budget", config.failure_budget},
    };

    std::ofstream log(record_log_path, std::ios::binary | std::ios::trunc);
    if (!log) {
        throw ValidationError("cannot open record log for writing: " +
                              record_log_path.string());
    }
    log << nlohmann::json{{"type", "config"}, {"config", config_echo}}.dump()
        << "\n";
    log.flush();

    std::size_t total_variants = 0;
    for (const FaqEntry* f : ordered) {
        total_variants += f->variants.size();
    }
    const double budget =
        config.failure_budget * static_cast<double>(total_variants);

    std::vector<RagRecord> records;
    int failed = 0;
    for (const FaqEntry* faq : ordered) {
        for (std::size_t vi = 0; vi < faq->variants.size(); ++vi) {
            const std::string& variant = faq->variants[vi];
            try {
                RagRecord record;
                record.variant_index = static_cast<int>(vi);
                record.variant_query = variant;
                record.source_faq_id = faq->id;
                record.domain = faq->domain;
                record.retrieved =
                    retrieve_context(variant, domain_embeddings.at(faq->domain),
                                     embedder, config.retrieval_k);
                record.generated_answer = generate_answer(
                    variant, record.retrieved, faq_by_id, answer_template,
                    generator, config.reprompt_retries,
                    &record.generator_request_digest);
                JudgeResult judged =
                    judge_answer(variant, record.generated_answer, faq->answer,
                                 judge_template, judge, config.reprompt_retries);
                record.verdict = judged.verdict;
                record.judge_raw = judged.raw;
                record.judge_request_digest = judged.request_digest;
                log << detail::record_to_json(record).dump() << "\n";
                log.flush();
                records.push_back(std::move(record));
            } catch (const Error& e) {
                ++failed;
                log << nlohmann::json{{"type", "failure"},
                                      {"variant_index", static_cast<int>(vi)},
                                      {"source_faq_id", faq->id},
                                      {"domain", faq->domain},
                                      {"error", e.what()}}
                           .dump()
                    << "\n";
                log.flush();
                if (static_cast<double>(failed) > budget) {
                    throw EndpointError(
                        "failure budget exceeded: " + std::to_string(failed) +
                        " of " + std::to_string(total_variants) +
                        " variants failed (budget " +
                        std::to_string(config.failure_budget) +
                        "); partial record log retained at " +
                        record_log_path.string());
                }
            }
        }
    }
    if (records.empty()) {
        throw EndpointError("no variant was evaluated successfully; record log "
                            "retained at " + record_log_path.string());
    }
    return detail::report_from_records(config_echo, records, failed);
}

struct RecordLog {
    nlohmann::json config_echo;
    std::vector<RagRecord> records;
    int failed = 0;
};

inline RecordLog read_record_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open record log: " + path.string());
    }
    RecordLog log;
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
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed record log line: " + e.what());
        }
        const std::string type = obj.value("type", std::string{"record"});
        if (type == "config") {
            log.config_echo = obj.at("config");
        } else if (type == "failure") {
            ++log.failed;
        } else if (type == "record") {
            log.records.push_back(detail::record_from_json(obj));
        } else {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": unknown record log line type \"" + type +
                                  "\"");
        }
    }
    return log;
}

// Replay: the report recomputed purely from the persisted log. Matches the
// live report bit for bit because the report is a pure function of the
// records and the config echo.
inline RagReport replay_rag_eval(const std::filesystem::path& record_log_path) {
    RecordLog log = read_record_log(record_log_path);
    if (log.records.empty()) {
        throw ValidationError("record log holds no evaluated variants: " +
                              record_log_path.string());
    }
    std::sort(log.records.begin(), log.records.end(),
              [](const RagRecord& a, const RagRecord& b) {
                  return std::tie(a.domain, a.source_faq_id, a.variant_index) <
                         std::tie(b.domain, b.source_faq_id, b.variant_index);
              });
    return detail::report_from_records(log.config_echo, log.records, log.failed);
}

} // namespace sembench
