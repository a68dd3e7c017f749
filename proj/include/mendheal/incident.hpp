// incident.hpp - append-only incident memory: one JSON record per line in
// `.heal/incidents.jsonl`. Appends are serialized with an advisory lock and a
// single write so concurrent cycles on different workspaces can share a store.
#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mendheal/faults.hpp"
#include "mendheal/util.hpp"

namespace mendheal {

class StoreError : public std::runtime_error {
public:
    explicit StoreError(const std::string& m) : std::runtime_error(m) {}
};

struct EvidenceRecord {
    std::string kind;  // trace | pattern | history
    double score = 0;
    std::string detail;
};

struct HypothesisRecord {
    std::string site;  // dotted node path
    std::string bug_class;
    double confidence = 0;
    std::vector<EvidenceRecord> evidence;
};

struct AttemptRecord {
    std::string candidate_id;
    std::string origin;  // template | search | regeneration | external
    std::string digest;  // edit digest, hex
    std::string verdict; // accept | reject:<reason>
};

struct IncidentRecord {
    uint64_t fingerprint = 0;
    std::string outcome;       // healed_auto | healed_after_review | escalated
    std::string healed_class;  // bug class of the accepted candidate, if healed
    int64_t detected_at_ms = 0;
    int64_t resolved_at_ms = 0;
    int64_t mttr_ms = -1;  // resolved - detected, present (>= 0) iff healed
    std::string error_code;
    std::string function;
    std::string site;  // dotted path of the innermost failing statement
    std::string primary_test;
    bool anomaly = false;
    std::vector<std::string> failing_tests;
    std::vector<HypothesisRecord> hypotheses;
    std::vector<AttemptRecord> attempts;
};

inline nlohmann::json incident_to_json(const IncidentRecord& r) {
    nlohmann::json j;
    j["fingerprint"] = to_hex16(r.fingerprint);
    j["outcome"] = r.outcome;
    if (!r.healed_class.empty()) j["healed_class"] = r.healed_class;
    j["detected_at_ms"] = r.detected_at_ms;
    j["resolved_at_ms"] = r.resolved_at_ms;
    if (r.mttr_ms >= 0) j["mttr_ms"] = r.mttr_ms;
    j["error_code"] = r.error_code;
    j["function"] = r.function;
    j["site"] = r.site;
    j["primary_test"] = r.primary_test;
    j["anomaly"] = r.anomaly;
    j["failing_tests"] = r.failing_tests;
    nlohmann::json hyps = nlohmann::json::array();
    for (const auto& h : r.hypotheses) {
        nlohmann::json hj;
        hj["site"] = h.site;
        hj["class"] = h.bug_class;
        hj["confidence"] = h.confidence;
        nlohmann::json ev = nlohmann::json::array();
        for (const auto& e : h.evidence)
            ev.push_back({{"kind", e.kind}, {"score", e.score}, {"detail", e.detail}});
        hj["evidence"] = std::move(ev);
        hyps.push_back(std::move(hj));
    }
    j["hypotheses"] = std::move(hyps);
    nlohmann::json atts = nlohmann::json::array();
    for (const auto& a : r.attempts)
        atts.push_back({{"candidate_id", a.candidate_id},
                        {"origin", a.origin},
                        {"digest", a.digest},
                        {"verdict", a.verdict}});
    j["attempts"] = std::move(atts);
    return j;
}

inline IncidentRecord incident_from_json(const nlohmann::json& j) {
    IncidentRecord r;
    r.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
    r.outcome = j.at("outcome").get<std::string>();
    if (j.contains("healed_class")) r.healed_class = j["healed_class"].get<std::string>();
    r.detected_at_ms = j.value("detected_at_ms", int64_t{0});
    r.resolved_at_ms = j.value("resolved_at_ms", int64_t{0});
    r.mttr_ms = j.value("mttr_ms", int64_t{-1});
    r.error_code = j.value("error_code", std::string{});
    r.function = j.value("function", std::string{});
    r.site = j.value("site", std::string{});
    r.primary_test = j.value("primary_test", std::string{});
    r.anomaly = j.value("anomaly", false);
    if (j.contains("failing_tests"))
        r.failing_tests = j["failing_tests"].get<std::vector<std::string>>();
    if (j.contains("hypotheses"))
        for (const auto& hj : j["hypotheses"]) {
            HypothesisRecord h;
            h.site = hj.value("site", std::string{});
            h.bug_class = hj.value("class", std::string{});
            h.confidence = hj.value("confidence", 0.0);
            if (hj.contains("evidence"))
                for (const auto& ej : hj["evidence"])
                    h.evidence.push_back({ej.value("kind", std::string{}),
                                          ej.value("score", 0.0),
                                          ej.value("detail", std::string{})});
            r.hypotheses.push_back(std::move(h));
        }
    if (j.contains("attempts"))
        for (const auto& aj : j["attempts"])
            r.attempts.push_back({aj.value("candidate_id", std::string{}),
                                  aj.value("origin", std::string{}),
                                  aj.value("digest", std::string{}),
                                  aj.value("verdict", std::string{})});
    return r;
}

class IncidentStore {
public:
    explicit IncidentStore(std::filesystem::path path) : path_(std::move(path)) {}

    const std::filesystem::path& path() const { return path_; }

    // Appends one record as a single line. The whole line is written with one
    // write(2) under an exclusive flock, so concurrent appenders cannot
    // interleave partial records.
    void append(const IncidentRecord& r) const {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
        std::string line = incident_to_json(r).dump();
        line.push_back('\n');
        int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd < 0) throw StoreError("cannot open incident store: " + path_.string());
        ::flock(fd, LOCK_EX);
        ssize_t n = ::write(fd, line.data(), line.size());
        ::flock(fd, LOCK_UN);
        ::close(fd);
        if (n != static_cast<ssize_t>(line.size()))
            throw StoreError("short write to incident store: " + path_.string());
    }

    // Reads every record; a missing file is an empty store. A malformed line
    // is a hard error: the store is append-only and must never decay silently.
    std::vector<IncidentRecord> read_all() const {
        std::vector<IncidentRecord> out;
        auto text = read_file(path_.string());
        if (!text) return out;
        for (const auto& line : split_lines(*text)) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw StoreError("corrupt incident record in " + path_.string());
            out.push_back(incident_from_json(j));
        }
        return out;
    }

private:
    std::filesystem::path path_;
};

}  // namespace mendheal
