#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace wedas {

// Millisecond timestamps; injectable so scripted runs can be replayed byte-for-byte.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

// Injectable sleep for rate limiting and retry backoff in tests.
using Sleeper = std::function<void(std::int64_t /*ms*/)>;
void thread_sleep_ms(std::int64_t ms);

struct HttpRetryPolicy {
    int max_retries = 3;      // additional attempts after the first
    int base_delay_ms = 200;  // doubled per retry
    int timeout_sec = 30;
};

// 64-bit FNV-1a, the stable hash used for cache keys and fixture fingerprints.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

}  // namespace wedas
