#pragma once

// Chat-completion access for the generation and judging stages. The wire
// contract is minimal so local inference servers and hosted APIs are
// interchangeable:
//
//   POST <endpoint>  {"model": "...", "messages": [{"role","content"}...]}
//   200              {"text": "..."}

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sembench/errors.hpp"
#include "sembench/http.hpp"

namespace sembench {

struct ChatConfig {
    std::string model;
    std::string endpoint_url;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::chrono::milliseconds backoff{100};
    std::string auth_env;

    void validate() const {
        if (model.empty()) {
            throw ValidationError("chat model must be non-empty");
        }
        if (endpoint_url.empty()) {
            throw ValidationError("chat endpoint_url must be non-empty");
        }
        if (max_retries < 0) {
            throw ValidationError("chat max_retries must be >= 0");
        }
    }
};

inline ChatConfig chat_config_from_json(const nlohmann::json& j) {
    ChatConfig cfg;
    cfg.model = j.at("model").get<std::string>();
    cfg.endpoint_url = j.at("endpoint_url").get<std::string>();
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<std::int64_t>(cfg.timeout.count())));
    cfg.backoff = std::chrono::milliseconds(
        j.value("backoff_ms", static_cast<std::int64_t>(cfg.backoff.count())));
    cfg.auth_env = j.value("auth_env", std::string{});
    cfg.validate();
    return cfg;
}

struct ChatMessage {
    std::string role;
    std::string content;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
    virtual const std::string& model() const = 0;
};

class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(ChatConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    std::string complete(const std::vector<ChatMessage>& messages) override {
        const SplitUrl url = split_url(config_.endpoint_url);
        const std::string token = resolve_auth_token(config_.auth_env);
        nlohmann::json msgs = nlohmann::json::array();
        for (const auto& m : messages) {
            msgs.push_back({{"role", m.role}, {"content", m.content}});
        }
        const std::string body =
            nlohmann::json{{"model", config_.model}, {"messages", msgs}}.dump();

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
                throw AuthError("chat endpoint rejected credentials (HTTP " +
                                std::to_string(res->status) + ")");
            }
            if (res->status != 200) {
                last_failure = "HTTP " + std::to_string(res->status);
                if (transient_http_status(res->status)) {
                    continue;
                }
                throw EndpointError("chat endpoint failed: " + last_failure);
            }
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw EndpointError(std::string("chat response is not JSON: ") +
                                    e.what());
            }
            if (!parsed.contains("text") || !parsed["text"].is_string()) {
                throw EndpointError("chat response lacks string field \"text\"");
            }
            return parsed["text"].get<std::string>();
        }
        throw EndpointError("chat endpoint failed after " +
                            std::to_string(config_.max_retries + 1) +
                            " attempts; last failure: " + last_failure);
    }

    const std::string& model() const override { return config_.model; }

private:
    ChatConfig config_;
};

// Completion computed by a plain function; the building block for test
// doubles and the offline synthetic clients.
class CallbackChatClient : public ChatClient {
public:
    using Fn = std::function<std::string(const std::vector<ChatMessage>&)>;

    CallbackChatClient(std::string model, Fn fn)
        : model_(std::move(model)), fn_(std::move(fn)) {}

    std::string complete(const std::vector<ChatMessage>& messages) override {
        return fn_(messages);
    }

    const std::string& model() const override { return model_; }

private:
    std::string model_;
    Fn fn_;
};

// --- prompt templates -------------------------------------------------

// Templates are external files with {placeholder} slots, so prompt
// engineering never requires a rebuild.
inline std::string load_prompt_template(
    const std::filesystem::path& path,
    const std::vector<std::string>& required_placeholders) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open prompt template: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string tmpl = buf.str();
    for (const auto& name : required_placeholders) {
        if (tmpl.find("{" + name + "}") == std::string::npos) {
            throw ValidationError("prompt template " + path.string() +
                                  " lacks required placeholder {" + name + "}");
        }
    }
    return tmpl;
}

inline std::string
fill_template(const std::string& tmpl,
              const std::map<std::string, std::string>& values) {
    std::string out = tmpl;
    for (const auto& [name, value] : values) {
        const std::string slot = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    }
    return out;
}

// First balanced JSON object embedded in a completion. LLMs wrap payloads
// in prose and code fences; scanning for a parseable {...} span is the
// tolerant middle ground that still rejects genuinely malformed output.
inline std::optional<nlohmann::json>
extract_json_object(const std::string& completion) {
    for (std::size_t start = completion.find('{'); start != std::string::npos;
         start = completion.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < completion.size(); ++i) {
            const char c = completion[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    const auto span = completion.substr(start, i - start + 1);
                    try {
                        return nlohmann::json::parse(span);
                    } catch (const nlohmann::json::exception&) {
                        break; // try the next '{'
                    }
                }
            }
        }
    }
    return std::nullopt;
}

} // namespace sembench
