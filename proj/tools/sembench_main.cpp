// sembench: benchmark harness for semantic-search rankers and RAG answer
// accuracy over graded-relevance datasets.
//
// Subcommands:
//   eval-search  rank each query's judged documents by cosine similarity
//                and report nDCG@k / MRR@k / mAP@k
//   baseline     random-permutation and worst-ordering reference reports
//   eval-rag     retrieve -> generate -> judge accuracy over FAQ variants
//   generate     synthesize queries+qrels or FAQ variants with an LLM
//   embed        materialize the embedding cache for offline runs
//
// Exit codes: 0 success, 2 usage/validation, 3 endpoint failure,
// 4 generation-invariant failure.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sembench/corpus.hpp"
#include "sembench/datasetgen.hpp"
#include "sembench/encoder_gateway.hpp"
#include "sembench/metrics.hpp"
#include "sembench/ragpipeline.hpp"
#include "sembench/ranking.hpp"
#include "sembench/report.hpp"
#include "sembench/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sembench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitEndpoint = 3;
constexpr int kExitGeneration = 4;

struct OutputOptions {
    std::string out_prefix;
    std::string format = "table";
};

void add_output_options(CLI::App* cmd, OutputOptions& out) {
    cmd->add_option("--out", out.out_prefix,
                    "Output prefix; writes <out>.json, <out>.txt and "
                    "<out>.manifest.json");
    cmd->add_option("--format", out.format, "Stdout projection")
        ->check(CLI::IsMember({"json", "table", "csv"}))
        ->capture_default_str();
}

RunManifest make_manifest(const std::string& subcommand, json resolved_config,
                          const std::vector<fs::path>& inputs) {
    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.resolved_config = std::move(resolved_config);
    for (const auto& path : inputs) {
        manifest.input_digests[path.filename().string()] = file_digest(path);
    }
    manifest.timestamp_utc = current_timestamp_utc();
    return manifest;
}

void emit_report(const json& envelope, const OutputOptions& out,
                 const RunManifest& manifest, bool rag) {
    if (out.format == "json") {
        std::cout << envelope.dump(2) << "\n";
    } else if (out.format == "csv") {
        std::cout << (rag ? render_rag_csv(envelope)
                          : render_metric_csv(envelope));
    } else {
        std::cout << (rag ? render_rag_table(envelope)
                          : render_metric_table(envelope));
    }
    if (!out.out_prefix.empty()) {
        write_json_file(out.out_prefix + ".json", envelope);
        std::ofstream table(out.out_prefix + ".txt", std::ios::binary);
        table << (rag ? render_rag_table(envelope)
                      : render_metric_table(envelope));
        write_manifest(out.out_prefix + ".manifest.json", manifest);
    }
}

// Report validation findings; errors are fatal for evaluation runs.
bool report_findings(const ValidationReport& report) {
    for (const auto& f : report.errors) {
        std::cerr << "error: " << f.message << "\n";
    }
    for (const auto& f : report.warnings) {
        std::cerr << "warning: " << f.message << "\n";
    }
    return report.ok();
}

// --- embedding sources --------------------------------------------------

// Embeddings for eval-search come from one of three places: a JSONL of
// precomputed vectors keyed by item id, a binary cache keyed by
// (model, text), or a live encoder endpoint (optionally cache-backed).
struct EmbeddingSource {
    std::string embeddings_path;
    std::string cache_path;
    std::string encoder_config_path;
    std::string model_id; // required with --cache

    void add_options(CLI::App* cmd) {
        auto* emb = cmd->add_option("--embeddings", embeddings_path,
                                    "Precomputed embeddings JSONL "
                                    "({\"id\",\"model\",\"vector\"})");
        auto* enc = cmd->add_option("--encoder", encoder_config_path,
                                    "Encoder endpoint config JSON");
        cmd->add_option("--cache", cache_path, "Binary embedding cache file");
        cmd->add_option("--model", model_id,
                        "Model id for --cache lookups (defaults to the "
                        "encoder's model)");
        emb->excludes(enc);
    }

    // Vector for every (id, text) item, resolved per the configured source.
    std::vector<EmbeddingRecord>
    resolve(const std::vector<std::pair<std::string, std::string>>& items,
            std::vector<fs::path>& manifest_inputs) {
        std::vector<EmbeddingRecord> out;
        if (!embeddings_path.empty()) {
            manifest_inputs.push_back(embeddings_path);
            auto records = load_embeddings_jsonl(embeddings_path);
            std::map<std::string, const EmbeddingRecord*> by_id;
            for (const auto& r : records) {
                by_id[r.item_id] = &r;
            }
            for (const auto& [id, text] : items) {
                auto it = by_id.find(id);
                if (it == by_id.end()) {
                    throw ValidationError("no embedding for item \"" + id +
                                          "\" in " + embeddings_path);
                }
                out.push_back(*it->second);
            }
            return out;
        }
        if (!encoder_config_path.empty()) {
            manifest_inputs.push_back(encoder_config_path);
            const EncoderConfig config =
                encoder_config_from_json(read_json_file(encoder_config_path));
            HttpEncoder encoder(config);
            std::optional<EmbeddingCache> cache;
            if (!cache_path.empty()) {
                cache.emplace(cache_path);
            }
            std::vector<std::string> texts;
            for (const auto& [id, text] : items) {
                texts.push_back(text);
            }
            auto vectors =
                get_or_embed(texts, encoder, cache ? &*cache : nullptr);
            for (std::size_t i = 0; i < items.size(); ++i) {
                out.push_back({items[i].first, config.model_id,
                               std::move(vectors[i])});
            }
            return out;
        }
        if (!cache_path.empty()) {
            if (model_id.empty()) {
                throw ValidationError("--cache without --encoder needs --model");
            }
            manifest_inputs.push_back(cache_path);
            EmbeddingCache cache(cache_path);
            for (const auto& warning : cache.warnings()) {
                std::cerr << "warning: " << warning << "\n";
            }
            for (const auto& [id, text] : items) {
                auto hit = cache.find(model_id, text);
                if (!hit) {
                    throw ValidationError(
                        "cache " + cache_path + " has no vector for item \"" +
                        id + "\" under model \"" + model_id +
                        "\"; run `sembench embed` first");
                }
                out.push_back({id, model_id, std::move(*hit)});
            }
            return out;
        }
        throw ValidationError(
            "no embedding source: pass --embeddings, --cache or --encoder");
    }
};

// --- eval-search ----------------------------------------------------------

struct EvalSearchArgs {
    std::string docs_path;
    std::string queries_path;
    std::string qrels_path;
    EmbeddingSource source;
    int k = 3;
    std::string ap_mode = "binarized";
    std::string run_label;
    OutputOptions out;
};

int run_eval_search(const EvalSearchArgs& args) {
    MetricConfig metric_config;
    metric_config.k = args.k;
    metric_config.ap_mode = ap_mode_from_string(args.ap_mode);
    metric_config.validate();

    const auto docs = load_documents(args.docs_path);
    const auto queries = load_queries(args.queries_path);
    const auto judgments = load_judgments(args.qrels_path);
    if (!report_findings(validate_benchmark(docs, queries, judgments))) {
        return kExitValidation;
    }

    std::vector<std::pair<std::string, std::string>> items;
    std::set<std::string> ids;
    for (const auto& d : docs) {
        items.emplace_back(d.id, d.text);
        ids.insert(d.id);
    }
    for (const auto& q : queries) {
        if (ids.count(q.id)) {
            throw ValidationError("query id \"" + q.id +
                                  "\" collides with a document id");
        }
        items.emplace_back(q.id, q.text);
    }
    std::vector<fs::path> manifest_inputs{args.docs_path, args.queries_path,
                                          args.qrels_path};
    EmbeddingSource source = args.source;
    const auto records = source.resolve(items, manifest_inputs);
    std::map<std::string, const EmbeddingRecord*> by_id;
    for (const auto& r : records) {
        by_id[r.item_id] = &r;
    }

    // Candidate pool per query: exactly its judged documents.
    const JudgmentIndex index(judgments);
    std::vector<RankedList> rankings;
    for (const auto& [query_id, judged_docs] : index.by_query()) {
        const EmbeddingRecord& query_rec = *by_id.at(query_id);
        std::vector<EmbeddingRecord> candidates;
        candidates.reserve(judged_docs.size());
        for (const auto& [doc_id, grade] : judged_docs) {
            candidates.push_back(*by_id.at(doc_id));
        }
        rankings.push_back(rank_documents(query_rec, candidates,
                                          static_cast<int>(candidates.size())));
    }

    const std::string model = records.empty() ? "" : records.front().model_id;
    const std::string label = args.run_label.empty() ? model : args.run_label;
    MetricReport report = evaluate_run(rankings, index, metric_config, label);
    report.embedding_dim = records.empty()
                               ? std::optional<int>{}
                               : static_cast<int>(records.front().vector.size());

    const json envelope =
        search_report_envelope(metric_config.k, metric_config.ap_mode, {report});
    emit_report(envelope, args.out,
                make_manifest("eval-search",
                              json{{"k", args.k},
                                   {"ap_mode", args.ap_mode},
                                   {"run_label", label},
                                   {"model", model}},
                              manifest_inputs),
                /*rag=*/false);
    return kExitOk;
}

// --- baseline ---------------------------------------------------------------

struct BaselineArgs {
    std::string qrels_path;
    int samples = 30;
    std::uint64_t seed = 0;
    int k = 3;
    std::string ap_mode = "binarized";
    OutputOptions out;
};

int run_baseline(const BaselineArgs& args) {
    MetricConfig metric_config;
    metric_config.k = args.k;
    metric_config.ap_mode = ap_mode_from_string(args.ap_mode);
    BaselineConfig baseline_config;
    baseline_config.samples = args.samples;
    baseline_config.seed = args.seed;
    baseline_config.validate();
    metric_config.validate();

    BenchmarkDataset dataset;
    dataset.judgments = load_judgments(args.qrels_path);
    if (dataset.judgments.empty()) {
        std::cerr << "error: qrels file holds no judgments: " << args.qrels_path
                  << "\n";
        return kExitValidation;
    }

    const MetricReport random =
        random_baseline(dataset, baseline_config, metric_config);
    const MetricReport worst = worst_ranking(dataset, metric_config);
    const json envelope = search_report_envelope(metric_config.k,
                                                 metric_config.ap_mode,
                                                 {random, worst});
    emit_report(envelope, args.out,
                make_manifest("baseline",
                              json{{"k", args.k},
                                   {"ap_mode", args.ap_mode},
                                   {"samples", args.samples},
                                   {"seed", args.seed},
                                   {"rng", std::string(kPermutationRngId)}},
                              {args.qrels_path}),
                /*rag=*/false);
    return kExitOk;
}

// --- eval-rag ---------------------------------------------------------------

struct EvalRagArgs {
    std::string faq_path;
    std::string replay_path;
    std::string embeddings_path;
    std::string encoder_config_path;
    std::string generator_config_path;
    std::string judge_config_path;
    std::string answer_template;
    std::string judge_template;
    std::string records_out;
    std::vector<int> retrieval_ks{3};
    double failure_budget = 0.1;
    OutputOptions out;
};

int run_eval_rag(const EvalRagArgs& args) {
    if (!args.replay_path.empty()) {
        const RagReport report = replay_rag_eval(args.replay_path);
        const int k = report.config_echo.at("retrieval_k").get<int>();
        const std::string encoder =
            report.config_echo.at("encoder_model").get<std::string>();
        const json envelope = rag_report_envelope(encoder, {{k, report}});
        emit_report(envelope, args.out,
                    make_manifest("eval-rag",
                                  json{{"replay", args.replay_path}},
                                  {args.replay_path}),
                    /*rag=*/true);
        return kExitOk;
    }

    const auto faqs = load_faqs(args.faq_path);
    if (args.records_out.empty()) {
        throw ValidationError("live eval-rag needs --records-out for the "
                              "record log");
    }
    if (args.generator_config_path.empty() || args.judge_config_path.empty()) {
        throw ValidationError("live eval-rag needs --generator and --judge "
                              "endpoint configs");
    }
    if (args.answer_template.empty() || args.judge_template.empty()) {
        throw ValidationError("live eval-rag needs --gen-template and "
                              "--judge-template");
    }

    std::vector<fs::path> manifest_inputs{args.faq_path, args.answer_template,
                                          args.judge_template};

    std::unique_ptr<Embedder> embedder;
    RagConfig config;
    if (!args.embeddings_path.empty()) {
        manifest_inputs.push_back(args.embeddings_path);
        std::map<std::string, std::string> text_by_id;
        for (const auto& f : faqs) {
            text_by_id[f.id] = f.question;
        }
        embedder = std::make_unique<StaticEmbedder>(StaticEmbedder::from_records(
            load_embeddings_jsonl(args.embeddings_path), text_by_id));
    } else if (!args.encoder_config_path.empty()) {
        manifest_inputs.push_back(args.encoder_config_path);
        config.encoder =
            encoder_config_from_json(read_json_file(args.encoder_config_path));
        embedder = std::make_unique<HttpEncoder>(config.encoder);
    } else {
        throw ValidationError("live eval-rag needs --embeddings or --encoder");
    }

    config.generator =
        chat_config_from_json(read_json_file(args.generator_config_path));
    config.judge = chat_config_from_json(read_json_file(args.judge_config_path));
    config.answer_template_path = args.answer_template;
    config.judge_template_path = args.judge_template;
    config.failure_budget = args.failure_budget;
    manifest_inputs.push_back(args.generator_config_path);
    manifest_inputs.push_back(args.judge_config_path);

    HttpChatClient generator(config.generator);
    HttpChatClient judge(config.judge);

    std::vector<std::pair<int, RagReport>> runs;
    for (int k : args.retrieval_ks) {
        config.retrieval_k = k;
        const fs::path log_path = args.retrieval_ks.size() == 1
                                      ? fs::path(args.records_out)
                                      : fs::path(args.records_out + ".k" +
                                                 std::to_string(k) + ".jsonl");
        runs.emplace_back(k, run_rag_eval(faqs, config, *embedder, generator,
                                          judge, log_path));
        std::cerr << "record log: " << log_path.string() << "\n";
    }

    const json envelope = rag_report_envelope(embedder->model_id(), runs);
    json resolved = {{"retrieval_ks", args.retrieval_ks},
                     {"failure_budget", args.failure_budget},
                     {"encoder_model", embedder->model_id()},
                     {"generator_model", config.generator.model},
                     {"judge_model", config.judge.model}};
    emit_report(envelope, args.out,
                make_manifest("eval-rag", resolved, manifest_inputs),
                /*rag=*/true);
    return kExitOk;
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string mode = "search";
    std::string docs_path;
    std::string faq_path;
    std::string generator; // "mock" or a chat endpoint config JSON path
    std::string prompt_template;
    int group_size = 5;
    int variants = 3;
    std::uint64_t seed = 0;
    int max_retries = 3;
    bool allow_remainder = false;
    std::string out_queries;
    std::string out_qrels;
    std::string out_faq;
    std::string checkpoint;
    double audit_fraction = 0.0;
    std::string audit_out;
};

std::unique_ptr<ChatClient> make_generator_client(const GenerateArgs& args,
                                                  GenerationConfig& config) {
    if (args.generator == "mock") {
        config.generator.model = "synthetic-generator";
        config.generator.endpoint_url = "mock://generator";
        if (args.mode == "search") {
            return std::make_unique<CallbackChatClient>(
                make_synthetic_group_client());
        }
        return std::make_unique<CallbackChatClient>(
            make_synthetic_variants_client(config.variants_per_question));
    }
    config.generator = chat_config_from_json(read_json_file(args.generator));
    return std::make_unique<HttpChatClient>(config.generator);
}

int run_generate(const GenerateArgs& args) {
    GenerationConfig config;
    config.group_size = args.group_size;
    config.variants_per_question = args.variants;
    config.prompt_template_path = args.prompt_template;
    config.seed = args.seed;
    config.max_retries = args.max_retries;
    config.allow_remainder = args.allow_remainder;
    config.validate();

    auto client = make_generator_client(args, config);

    if (args.mode == "search") {
        if (args.docs_path.empty() || args.out_queries.empty() ||
            args.out_qrels.empty()) {
            throw ValidationError("generate --mode search needs --docs, "
                                  "--out-queries and --out-qrels");
        }
        const auto docs = load_documents(args.docs_path);
        const GenerationRun run = generate_search_dataset(
            docs, config, *client,
            args.checkpoint.empty() ? fs::path{} : fs::path(args.checkpoint));
        for (const auto& warning : run.warnings) {
            std::cerr << "warning: " << warning << "\n";
        }
        write_queries(args.out_queries, run.dataset.queries);
        write_judgments(args.out_qrels, run.dataset.judgments);
        std::array<std::size_t, 3> grade_counts{};
        for (const auto& j : run.dataset.judgments) {
            ++grade_counts[static_cast<std::size_t>(j.relevance)];
        }
        std::cerr << "generated " << run.dataset.queries.size()
                  << " queries and " << run.dataset.judgments.size()
                  << " judgments (grade distribution: 0=" << grade_counts[0]
                  << ", 1=" << grade_counts[1] << ", 2=" << grade_counts[2]
                  << ")\n";
        if (args.audit_fraction > 0.0) {
            const std::string audit_path = args.audit_out.empty()
                                               ? args.out_qrels + ".audit.tsv"
                                               : args.audit_out;
            export_audit_sample(run.dataset, args.audit_fraction, args.seed,
                                audit_path);
            std::cerr << "audit sample: " << audit_path << "\n";
        }
        RunManifest manifest = make_manifest(
            "generate",
            json{{"mode", args.mode},
                 {"group_size", args.group_size},
                 {"seed", args.seed},
                 {"generator", args.generator},
                 {"allow_remainder", args.allow_remainder},
                 {"audit_fraction", args.audit_fraction}},
            {args.docs_path, args.prompt_template});
        write_manifest(args.out_queries + ".manifest.json", manifest);
        return kExitOk;
    }

    if (args.mode == "rag") {
        if (args.faq_path.empty() || args.out_faq.empty()) {
            throw ValidationError("generate --mode rag needs --faq and --out-faq");
        }
        const auto faqs = load_faqs(args.faq_path);
        std::vector<FaqEntry> out;
        out.reserve(faqs.size());
        std::size_t variant_total = 0;
        for (const auto& faq : faqs) {
            out.push_back(generate_question_variants(faq, config, *client));
            variant_total += out.back().variants.size();
        }
        write_faqs(args.out_faq, out);
        std::cerr << "generated " << variant_total << " variants for "
                  << out.size() << " FAQ entries\n";
        RunManifest manifest = make_manifest(
            "generate",
            json{{"mode", args.mode},
                 {"variants_per_question", args.variants},
                 {"generator", args.generator}},
            {args.faq_path, args.prompt_template});
        write_manifest(args.out_faq + ".manifest.json", manifest);
        return kExitOk;
    }

    throw ValidationError("generate --mode must be search or rag");
}

// --- embed --------------------------------------------------------------

struct EmbedArgs {
    std::string docs_path;
    std::string queries_path;
    std::string faq_path;
    std::string embeddings_path;
    std::string encoder_config_path;
    std::string cache_path;
};

int run_embed(const EmbedArgs& args) {
    std::vector<std::pair<std::string, std::string>> items;
    std::vector<fs::path> manifest_inputs;
    if (!args.docs_path.empty()) {
        manifest_inputs.push_back(args.docs_path);
        for (const auto& d : load_documents(args.docs_path)) {
            items.emplace_back(d.id, d.text);
        }
    }
    if (!args.queries_path.empty()) {
        manifest_inputs.push_back(args.queries_path);
        for (const auto& q : load_queries(args.queries_path)) {
            items.emplace_back(q.id, q.text);
        }
    }
    if (!args.faq_path.empty()) {
        manifest_inputs.push_back(args.faq_path);
        for (const auto& f : load_faqs(args.faq_path)) {
            items.emplace_back(f.id, f.question);
        }
    }
    if (items.empty()) {
        throw ValidationError("embed needs at least one of --docs, --queries, "
                              "--faq");
    }
    if (args.cache_path.empty()) {
        throw ValidationError("embed needs --cache");
    }

    std::unique_ptr<Embedder> embedder;
    if (!args.embeddings_path.empty()) {
        manifest_inputs.push_back(args.embeddings_path);
        std::map<std::string, std::string> text_by_id;
        for (const auto& [id, text] : items) {
            text_by_id[id] = text;
        }
        embedder = std::make_unique<StaticEmbedder>(StaticEmbedder::from_records(
            load_embeddings_jsonl(args.embeddings_path), text_by_id));
    } else if (!args.encoder_config_path.empty()) {
        manifest_inputs.push_back(args.encoder_config_path);
        embedder = std::make_unique<HttpEncoder>(
            encoder_config_from_json(read_json_file(args.encoder_config_path)));
    } else {
        throw ValidationError("embed needs --embeddings or --encoder");
    }

    EmbeddingCache cache(args.cache_path);
    for (const auto& warning : cache.warnings()) {
        std::cerr << "warning: " << warning << "\n";
    }
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& [id, text] : items) {
        texts.push_back(text);
    }
    get_or_embed(texts, *embedder, &cache);
    std::cerr << "cache " << args.cache_path << " holds " << cache.size()
              << " vectors (model " << embedder->model_id() << ", dimension "
              << cache.dimension() << ")\n";

    RunManifest manifest =
        make_manifest("embed",
                      json{{"model", embedder->model_id()},
                           {"dimension", embedder->dimension()},
                           {"items", items.size()}},
                      manifest_inputs);
    write_manifest(args.cache_path + ".manifest.json", manifest);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic-search and RAG evaluation harness"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    EvalSearchArgs search_args;
    auto* eval_search =
        app.add_subcommand("eval-search",
                           "Evaluate a ranker over judged documents");
    eval_search->add_option("--docs", search_args.docs_path, "documents.jsonl")
        ->required();
    eval_search->add_option("--queries", search_args.queries_path,
                            "queries.jsonl")
        ->required();
    eval_search->add_option("--qrels", search_args.qrels_path, "qrels.tsv")
        ->required();
    search_args.source.add_options(eval_search);
    eval_search->add_option("--k", search_args.k, "Metric cutoff")
        ->capture_default_str();
    eval_search->add_option("--ap-mode", search_args.ap_mode,
                            "AP relevance reading")
        ->check(CLI::IsMember({"binarized", "paper_literal"}))
        ->capture_default_str();
    eval_search->add_option("--run-label", search_args.run_label,
                            "Row label (defaults to the model id)");
    add_output_options(eval_search, search_args.out);

    BaselineArgs baseline_args;
    auto* baseline = app.add_subcommand(
        "baseline", "Random and worst reference rankings over the qrels");
    baseline->add_option("--qrels", baseline_args.qrels_path, "qrels.tsv")
        ->required();
    baseline->add_option("--samples", baseline_args.samples,
                         "Random permutations per query")
        ->capture_default_str();
    baseline->add_option("--seed", baseline_args.seed, "Permutation seed")
        ->capture_default_str();
    baseline->add_option("--k", baseline_args.k, "Metric cutoff")
        ->capture_default_str();
    baseline->add_option("--ap-mode", baseline_args.ap_mode,
                         "AP relevance reading")
        ->check(CLI::IsMember({"binarized", "paper_literal"}))
        ->capture_default_str();
    add_output_options(baseline, baseline_args.out);

    EvalRagArgs rag_args;
    auto* eval_rag = app.add_subcommand(
        "eval-rag", "Retrieval-augmented generation accuracy over FAQ variants");
    eval_rag->add_option("--faq", rag_args.faq_path,
                         "faq.jsonl with generated variants");
    eval_rag->add_option("--replay", rag_args.replay_path,
                         "Recompute the report from a record log");
    eval_rag->add_option("--embeddings", rag_args.embeddings_path,
                         "Precomputed question embeddings JSONL");
    eval_rag->add_option("--encoder", rag_args.encoder_config_path,
                         "Encoder endpoint config JSON");
    eval_rag->add_option("--generator", rag_args.generator_config_path,
                         "Generator chat endpoint config JSON");
    eval_rag->add_option("--judge", rag_args.judge_config_path,
                         "Judge chat endpoint config JSON");
    eval_rag->add_option("--gen-template", rag_args.answer_template,
                         "Answer-generation prompt template");
    eval_rag->add_option("--judge-template", rag_args.judge_template,
                         "Judge prompt template");
    eval_rag->add_option("--records-out", rag_args.records_out,
                         "Record log path (suffixed per k when several)");
    eval_rag
        ->add_option("--retrieval-k", rag_args.retrieval_ks,
                     "Retrieval depth(s), e.g. --retrieval-k 1 3")
        ->capture_default_str();
    eval_rag
        ->add_option("--failure-budget", rag_args.failure_budget,
                     "Abort when this fraction of variants fails")
        ->capture_default_str();
    add_output_options(eval_rag, rag_args.out);

    GenerateArgs generate_args;
    auto* generate = app.add_subcommand(
        "generate", "Synthesize benchmark data with an LLM");
    generate->add_option("--mode", generate_args.mode, "search or rag")
        ->check(CLI::IsMember({"search", "rag"}))
        ->capture_default_str();
    generate->add_option("--docs", generate_args.docs_path,
                         "documents.jsonl (search mode)");
    generate->add_option("--faq", generate_args.faq_path,
                         "faq.jsonl without variants (rag mode)");
    generate
        ->add_option("--generator", generate_args.generator,
                     "Chat endpoint config JSON, or \"mock\" for the offline "
                     "deterministic generator")
        ->required();
    generate
        ->add_option("--prompt-template", generate_args.prompt_template,
                     "Prompt template file")
        ->required();
    generate->add_option("--group-size", generate_args.group_size,
                         "Documents per generated query")
        ->capture_default_str();
    generate->add_option("--variants", generate_args.variants,
                         "Variants per FAQ question (rag mode)")
        ->capture_default_str();
    generate->add_option("--seed", generate_args.seed, "Partition seed")
        ->capture_default_str();
    generate->add_option("--max-retries", generate_args.max_retries,
                         "Re-prompts per invariant violation")
        ->capture_default_str();
    generate->add_flag("--allow-remainder", generate_args.allow_remainder,
                       "Accept a short final group");
    generate->add_option("--out-queries", generate_args.out_queries,
                         "Output queries.jsonl (search mode)");
    generate->add_option("--out-qrels", generate_args.out_qrels,
                         "Output qrels.tsv (search mode)");
    generate->add_option("--out-faq", generate_args.out_faq,
                         "Output faq.jsonl with variants (rag mode)");
    generate->add_option("--checkpoint", generate_args.checkpoint,
                         "Checkpoint JSONL for resumable generation");
    generate->add_option("--audit-fraction", generate_args.audit_fraction,
                         "Export this fraction of query groups for review");
    generate->add_option("--audit-out", generate_args.audit_out,
                         "Audit TSV path");

    EmbedArgs embed_args;
    auto* embed = app.add_subcommand(
        "embed", "Materialize the embedding cache ahead of offline runs");
    embed->add_option("--docs", embed_args.docs_path, "documents.jsonl");
    embed->add_option("--queries", embed_args.queries_path, "queries.jsonl");
    embed->add_option("--faq", embed_args.faq_path, "faq.jsonl");
    embed->add_option("--embeddings", embed_args.embeddings_path,
                      "Static provider: precomputed embeddings JSONL");
    embed->add_option("--encoder", embed_args.encoder_config_path,
                      "Encoder endpoint config JSON");
    embed->add_option("--cache", embed_args.cache_path,
                      "Binary cache file to materialize")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (eval_search->parsed()) {
            return run_eval_search(search_args);
        }
        if (baseline->parsed()) {
            return run_baseline(baseline_args);
        }
        if (eval_rag->parsed()) {
            return run_eval_rag(rag_args);
        }
        if (generate->parsed()) {
            return run_generate(generate_args);
        }
        if (embed->parsed()) {
            return run_embed(embed_args);
        }
    } catch (const AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const EndpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const GenerationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGeneration;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
