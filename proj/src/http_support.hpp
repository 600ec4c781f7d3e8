#pragma once

// Internal helpers shared by the live search and LLM backends. Not installed.

#include <chrono>
#include <string>
#include <thread>

#include "wedas/error.hpp"

namespace wedas::detail {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading slash, "/" when absent
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::config, "URL missing scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

inline bool auth_status(int status) { return status == 401 || status == 403; }

inline void backoff_sleep(int base_delay_ms, int attempt) {
    std::int64_t delay = static_cast<std::int64_t>(base_delay_ms) << attempt;
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
}

}  // namespace wedas::detail
