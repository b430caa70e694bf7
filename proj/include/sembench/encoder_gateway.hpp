#pragma once

// Provider-agnostic text embedding. Any backend that speaks the minimal
// JSON contract plugs in by configuration:
//
//   POST <endpoint>  {"model": "...", "inputs": ["...", ...]}
//   200              {"embeddings": [[...], ...]}
//
// A persistent cache keyed by (model id, content hash of the text) sits in
// front of the network, and a static provider serves precomputed vectors
// for fully offline runs.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sembench/embedding_store.hpp"
#include "sembench/errors.hpp"
#include "sembench/hash.hpp"
#include "sembench/http.hpp"
#include "sembench/ranking.hpp"

namespace sembench {

struct EncoderConfig {
    std::string model_id;
    std::string endpoint_url;
    int dimension = 0;
    int batch_size = 32;
    int max_retries = 3;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff{100};
    std::string auth_env; // env var holding the bearer token; empty = none

    void validate() const {
        if (model_id.empty()) {
            throw ValidationError("encoder model_id must be non-empty");
        }
        if (dimension < 1) {
            throw ValidationError("encoder dimension must be >= 1");
        }
        if (batch_size < 1) {
            throw ValidationError("encoder batch_size must be >= 1");
        }
        if (max_retries < 0) {
            throw ValidationError("encoder max_retries must be >= 0");
        }
    }
};

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    EncoderConfig cfg;
    cfg.model_id = j.at("model_id").get<std::string>();
    cfg.endpoint_url = j.at("endpoint_url").get<std::string>();
    cfg.dimension = j.at("dimension").get<int>();
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<std::int64_t>(cfg.timeout.count())));
    cfg.backoff = std::chrono::milliseconds(
        j.value("backoff_ms", static_cast<std::int64_t>(cfg.backoff.count())));
    cfg.auth_env = j.value("auth_env", std::string{});
    cfg.validate();
    return cfg;
}

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<float>>
    embed_batch(const std::vector<std::string>& texts) = 0;
    virtual const std::string& model_id() const = 0;
    virtual int dimension() const = 0;
};

class HttpEncoder : public Embedder {
public:
    explicit HttpEncoder(EncoderConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    std::vector<std::vector<float>>
    embed_batch(const std::vector<std::string>& texts) override {
        if (texts.empty()) {
            throw ValidationError("embed_batch: empty text list");
        }
        for (const auto& t : texts) {
            if (t.empty()) {
                throw ValidationError("embed_batch: empty text");
            }
        }
        std::vector<std::vector<float>> vectors;
        vectors.reserve(texts.size());
        for (std::size_t start = 0; start < texts.size();
             start += static_cast<std::size_t>(config_.batch_size)) {
            const std::size_t end =
                std::min(texts.size(),
                         start + static_cast<std::size_t>(config_.batch_size));
            auto batch = request_batch(
                std::vector<std::string>(texts.begin() + static_cast<long>(start),
                                         texts.begin() + static_cast<long>(end)));
            for (auto& v : batch) {
                vectors.push_back(std::move(v));
            }
        }
        return vectors;
    }

    const std::string& model_id() const override { return config_.model_id; }
    int dimension() const override { return config_.dimension; }

private:
    std::vector<std::vector<float>>
    request_batch(const std::vector<std::string>& texts) {
        const SplitUrl url = split_url(config_.endpoint_url);
        const std::string token = resolve_auth_token(config_.auth_env);
        const std::string body =
            nlohmann::json{{"model", config_.model_id}, {"inputs", texts}}.dump();

        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                backoff_sleep(config_.backoff, attempt - 1);
            }
            httplib::Client client(url.base);
            client.set_connection_timeout(config_.timeout);
            client.set_read_timeout(config_.timeout);
            httplib::Headers headers;
            if (!token.empty()) {
                headers.emplace("Authorization", "Bearer " + token);
            }
            auto res = client.Post(url.path, headers, body, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("encoder endpoint rejected credentials (HTTP " +
                                std::to_string(res->status) + ")");
            }
            if (res->status != 200) {
                last_failure = "HTTP " + std::to_string(res->status);
                if (transient_http_status(res->status)) {
                    continue;
                }
                throw EndpointError("encoder endpoint failed: " + last_failure);
            }
            return parse_embeddings(res->body, texts.size());
        }
        throw EndpointError("encoder endpoint failed after " +
                            std::to_string(config_.max_retries + 1) +
                            " attempts; last failure: " + last_failure);
    }

    std::vector<std::vector<float>> parse_embeddings(const std::string& body,
                                                     std::size_t expected) {
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(std::string("encoder response is not JSON: ") +
                                e.what());
        }
        if (!parsed.contains("embeddings") || !parsed["embeddings"].is_array()) {
            throw EndpointError("encoder response lacks \"embeddings\" array");
        }
        const auto& arr = parsed["embeddings"];
        if (arr.size() != expected) {
            throw EndpointError("encoder returned " + std::to_string(arr.size()) +
                                " vectors for " + std::to_string(expected) +
                                " inputs");
        }
        std::vector<std::vector<float>> vectors;
        vectors.reserve(arr.size());
        for (const auto& row : arr) {
            auto vec = row.get<std::vector<float>>();
            if (static_cast<int>(vec.size()) != config_.dimension) {
                throw EndpointError(
                    "dimension mismatch: endpoint returned " +
                    std::to_string(vec.size()) + "-wide vector for a " +
                    std::to_string(config_.dimension) + "-configured model \"" +
                    config_.model_id + "\"");
            }
            vectors.push_back(std::move(vec));
        }
        return vectors;
    }

    EncoderConfig config_;
};

inline std::vector<std::vector<float>>
embed_batch(const std::vector<std::string>& texts, const EncoderConfig& config) {
    HttpEncoder encoder(config);
    return encoder.embed_batch(texts);
}

// File-backed embedding cache. Keys combine model id, FNV-1a hash of the
// text and the text length, so equal texts under different models never
// collide. Append-only during a run; hits return the stored bytes.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path path)
        : path_(std::move(path)) {
        if (std::filesystem::exists(path_)) {
            auto contents = read_embedding_store(path_);
            warnings_ = std::move(contents.warnings);
            dimension_ = contents.dimension;
            for (auto& e : contents.entries) {
                entries_[e.id] = std::move(e.vector);
            }
        }
    }

    static std::string key(const std::string& model_id, const std::string& text) {
        return model_id + ":" + to_hex(fnv1a64(text)) + "-" +
               std::to_string(text.size());
    }

    std::optional<std::vector<float>> find(const std::string& model_id,
                                           const std::string& text) const {
        auto it = entries_.find(key(model_id, text));
        if (it == entries_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    void put(const std::string& model_id, const std::string& text,
             const std::vector<float>& vec) {
        const std::string k = key(model_id, text);
        if (entries_.count(k)) {
            return; // append-only; first write wins
        }
        if (!writer_) {
            dimension_ = dimension_ == 0 ? static_cast<int>(vec.size())
                                         : dimension_;
            // Re-reads and rewrites the file, salvaging the same rows this
            // cache was loaded from.
            writer_ = std::make_unique<EmbeddingStoreWriter>(path_, dimension_);
        }
        writer_->append(k, vec);
        entries_[k] = vec;
    }

    std::size_t size() const { return entries_.size(); }
    int dimension() const { return dimension_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int dimension_ = 0;
    std::map<std::string, std::vector<float>> entries_;
    std::unique_ptr<EmbeddingStoreWriter> writer_;
    std::vector<std::string> warnings_;
};

// Cache-aware embedding: hits bypass the network entirely, misses go out
// in input order (deduplicated) and are persisted before returning.
inline std::vector<std::vector<float>>
get_or_embed(const std::vector<std::string>& texts, Embedder& embedder,
             EmbeddingCache* cache) {
    std::vector<std::vector<float>> out(texts.size());
    std::vector<std::size_t> miss_positions;
    std::vector<std::string> miss_texts;
    std::map<std::string, std::size_t> first_miss_for_text;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache) {
            if (auto hit = cache->find(embedder.model_id(), texts[i])) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        miss_positions.push_back(i);
        if (auto it = first_miss_for_text.find(texts[i]);
            it == first_miss_for_text.end()) {
            first_miss_for_text.emplace(texts[i], miss_texts.size());
            miss_texts.push_back(texts[i]);
        }
    }
    if (!miss_texts.empty()) {
        auto vectors = embedder.embed_batch(miss_texts);
        if (vectors.size() != miss_texts.size()) {
            throw EndpointError("embedder returned " +
                                std::to_string(vectors.size()) +
                                " vectors for " +
                                std::to_string(miss_texts.size()) + " inputs");
        }
        for (std::size_t pos : miss_positions) {
            out[pos] = vectors[first_miss_for_text.at(texts[pos])];
        }
        if (cache) {
            for (std::size_t j = 0; j < miss_texts.size(); ++j) {
                cache->put(embedder.model_id(), miss_texts[j], vectors[j]);
            }
        }
    }
    return out;
}

inline std::vector<std::vector<float>>
get_or_embed(const std::vector<std::string>& texts, const EncoderConfig& config,
             EmbeddingCache* cache) {
    HttpEncoder encoder(config);
    return get_or_embed(texts, encoder, cache);
}

// Serves vectors for known texts only; backs fully offline runs. Built
// either from an explicit text->vector map or by joining an embeddings
// JSONL (id -> vector) with the items that carry the texts (id -> text).
class StaticEmbedder : public Embedder {
public:
    StaticEmbedder(std::string model_id, int dimension,
                   std::map<std::string, std::vector<float>> by_text)
        : model_id_(std::move(model_id)), dimension_(dimension),
          by_text_(std::move(by_text)) {}

    static StaticEmbedder
    from_records(const std::vector<EmbeddingRecord>& records,
                 const std::map<std::string, std::string>& text_by_id) {
        if (records.empty()) {
            throw ValidationError("static embedder needs at least one record");
        }
        std::map<std::string, std::vector<float>> by_text;
        const std::string& model = records.front().model_id;
        const int dim = static_cast<int>(records.front().vector.size());
        for (const auto& rec : records) {
            if (rec.model_id != model) {
                throw ValidationError("static embedder: mixed models \"" + model +
                                      "\" and \"" + rec.model_id + "\"");
            }
            if (static_cast<int>(rec.vector.size()) != dim) {
                throw ValidationError("static embedder: inconsistent dimensions");
            }
            auto it = text_by_id.find(rec.item_id);
            if (it == text_by_id.end()) {
                throw ValidationError("static embedder: no text for item \"" +
                                      rec.item_id + "\"");
            }
            by_text[it->second] = rec.vector;
        }
        return StaticEmbedder(model, dim, std::move(by_text));
    }

    std::vector<std::vector<float>>
    embed_batch(const std::vector<std::string>& texts) override {
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) {
            auto it = by_text_.find(text);
            if (it == by_text_.end()) {
                throw EndpointError(
                    "static embedding provider has no vector for text \"" +
                    text.substr(0, 64) + (text.size() > 64 ? "..." : "") + "\"");
            }
            out.push_back(it->second);
        }
        return out;
    }

    const std::string& model_id() const override { return model_id_; }
    int dimension() const override { return dimension_; }

private:
    std::string model_id_;
    int dimension_ = 0;
    std::map<std::string, std::vector<float>> by_text_;
};

} // namespace sembench
