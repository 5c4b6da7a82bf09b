#include "rwg/memory.hpp"

#include "json.hpp"
#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

using nlohmann::json;

int estimate_tokens(const std::string& text) {
    return static_cast<int>((text.size() + 3) / 4);
}

TokenEstimator default_estimator() {
    return [](const std::string& s) { return estimate_tokens(s); };
}

TokenBudget::TokenBudget(int limit_) : limit(limit_) {
    if (limit < 256) {
        throw ConfigError("token budget must be >= 256, got " + std::to_string(limit));
    }
}

std::string serialize_memory(const WorkingMemory& memory) {
    json notes = json::object();
    for (const auto& [id, note] : memory.per_paper_notes) notes[std::to_string(id)] = note;
    json j;
    j["per_paper_notes"] = std::move(notes);
    j["relationship_notes"] = memory.relationship_notes;
    j["scratch"] = memory.scratch;
    return j.dump();
}

void WorkingMemory::refresh(const TokenEstimator& est) {
    token_estimate = est(serialize_memory(*this));
}

namespace {

// Pulls one JSON object out of a reply that may wrap it in code fences or
// prose.
std::string extract_json_object(const std::string& text) {
    const size_t open = text.find('{');
    const size_t close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ParseError("reply contains no JSON object");
    }
    return text.substr(open, close - open + 1);
}

}  // namespace

WorkingMemory parse_memory(const std::string& text, int n_refs) {
    json j;
    try {
        j = json::parse(extract_json_object(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("memory reply is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("memory reply must be a JSON object");

    WorkingMemory mem;
    if (j.contains("per_paper_notes")) {
        if (!j["per_paper_notes"].is_object()) {
            throw ParseError("per_paper_notes must be an object");
        }
        for (const auto& [key, val] : j["per_paper_notes"].items()) {
            if (!detail::all_digits(detail::trim(key))) {
                throw ParseError("per_paper_notes key \"" + key + "\" is not a paper id");
            }
            if (!val.is_string()) {
                throw ParseError("per_paper_notes values must be strings");
            }
            const int id = std::stoi(detail::trim(key));
            if (id < 0 || id > n_refs) continue;  // ids outside the instance are dropped
            mem.per_paper_notes[id] = val.get<std::string>();
        }
    }
    if (j.contains("relationship_notes")) {
        if (!j["relationship_notes"].is_array()) {
            throw ParseError("relationship_notes must be an array");
        }
        for (const auto& note : j["relationship_notes"]) {
            if (!note.is_string()) throw ParseError("relationship_notes must hold strings");
            mem.relationship_notes.push_back(note.get<std::string>());
        }
    }
    if (j.contains("scratch")) {
        if (!j["scratch"].is_string()) throw ParseError("scratch must be a string");
        mem.scratch = j["scratch"].get<std::string>();
    }
    return mem;
}

bool enforce_budget(const WorkingMemory& memory, const TokenBudget& budget) {
    return memory.token_estimate <= budget.limit;
}

double retention_ratio(const WorkingMemory& memory, const TaskInstance& instance) {
    const int n = instance.n_refs();
    if (n == 0) return 0.0;
    int retained = 0;
    for (const auto& [id, note] : memory.per_paper_notes) {
        if (id >= 1 && id <= n && !note.empty()) ++retained;
    }
    return static_cast<double>(retained) / n;
}

void ReadingHistory::record(const Entry& item) {
    if (!seen_.insert(item).second) {
        throw DuplicateReadError("section (" + std::to_string(item.first) + ", " + item.second +
                                 ") was already read");
    }
    entries_.push_back(item);
}

}  // namespace rwg
