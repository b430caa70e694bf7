#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "sembench/errors.hpp"

namespace sembench {

struct SplitUrl {
    std::string base; // scheme://host[:port]
    std::string path; // leading slash, "/" if absent
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("endpoint url needs a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

// Resolves the bearer token named by an EncoderConfig/ChatConfig auth_env
// field. Empty name means unauthenticated.
inline std::string resolve_auth_token(const std::string& auth_env) {
    if (auth_env.empty()) {
        return {};
    }
    const char* value = std::getenv(auth_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthError("auth environment variable " + auth_env +
                        " is not set");
    }
    return value;
}

inline bool transient_http_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

inline void backoff_sleep(std::chrono::milliseconds base, int attempt) {
    auto delay = base * (1LL << std::min(attempt, 6));
    std::this_thread::sleep_for(delay);
}

} // namespace sembench
