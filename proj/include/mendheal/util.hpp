// util.hpp - hashing, deterministic RNG, clocks, small file/string helpers.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mendheal {

// --- hashing -------------------------------------------------------------

inline uint64_t fnv1a64(std::string_view data, uint64_t h = 14695981039346656037ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string to_hex16(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

// --- deterministic RNG ---------------------------------------------------
// SplitMix64: stable across platforms, unlike std:: distributions.

struct Rng {
    uint64_t state = 0;

    explicit Rng(uint64_t seed = 0) : state(seed) {}

    uint64_t next_u64() {
        state += 0x9E3779B97f4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform-enough pick in [0, n); n must be > 0.
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Probability in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

// Stable per-index seed derivation (rerun k of a quarantined test, worker k
// of a campaign, ...). Distinct indices give distinct streams.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
    char buf[16];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    for (int i = 0; i < 8; ++i) buf[8 + i] = static_cast<char>((index >> (8 * i)) & 0xff);
    return fnv1a64(std::string_view(buf, 16));
}

// --- clocks --------------------------------------------------------------
// Injectable so campaign reports can be byte-identical across runs.

class Clock {
public:
    virtual ~Clock() = default;
    virtual uint64_t now_ms() = 0;
};

class SystemClock final : public Clock {
public:
    uint64_t now_ms() override {
        using namespace std::chrono;
        return static_cast<uint64_t>(
            duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
    }
};

// Starts at a fixed epoch, advances a fixed tick per query.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(uint64_t start_ms = 1000000000000ULL, uint64_t tick_ms = 7)
        : now_(start_ms), tick_(tick_ms) {}
    uint64_t now_ms() override {
        uint64_t t = now_;
        now_ += tick_;
        return t;
    }

private:
    uint64_t now_;
    uint64_t tick_;
};

inline std::string format_iso8601(uint64_t epoch_ms) {
    std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
    std::tm tm_utc{};
    gmtime_r(&secs, &tm_utc);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm_utc.tm_year + 1900, tm_utc.tm_mon + 1, tm_utc.tm_mday,
                  tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec,
                  static_cast<int>(epoch_ms % 1000));
    return buf;
}

// --- files ---------------------------------------------------------------

inline std::optional<std::string> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bool write_file(const std::filesystem::path& p, std::string_view content) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return false;
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) return false;
    }
    std::filesystem::rename(tmp, p, ec);
    return !ec;
}

inline bool append_line(const std::filesystem::path& p, std::string_view line) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out) return false;
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    return static_cast<bool>(out);
}

// --- strings -------------------------------------------------------------

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) out.emplace_back(text.substr(start));
            break;
        }
        out.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace mendheal
