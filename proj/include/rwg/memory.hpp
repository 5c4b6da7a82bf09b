#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rwg/corpus.hpp"

namespace rwg {

// Deterministic token count heuristic: ceil(bytes / 4). Monotone in length.
int estimate_tokens(const std::string& text);

// Pluggable estimator; an exact tokenizer may replace the heuristic behind
// the same contract (deterministic, monotone).
using TokenEstimator = std::function<int(const std::string&)>;
TokenEstimator default_estimator();

struct TokenBudget {
    int limit = 4096;

    TokenBudget() = default;
    explicit TokenBudget(int limit);  // throws ConfigError when limit < 256
};

// The shared working memory the reader rewrites each step.
struct WorkingMemory {
    std::map<PaperId, std::string> per_paper_notes;
    std::vector<std::string> relationship_notes;
    std::string scratch;
    int token_estimate = 0;

    // Recomputes token_estimate from the serialized form. Call after any
    // mutation.
    void refresh(const TokenEstimator& est);

    bool operator==(const WorkingMemory&) const = default;
};

// Canonical JSON form; also what the token estimate is measured on.
std::string serialize_memory(const WorkingMemory& memory);

// Parses a backend reply into the memory schema. Tolerates code fences and
// surrounding prose around one JSON object. Integer note keys outside 0..n_refs
// are dropped; anything else off-schema throws ParseError.
WorkingMemory parse_memory(const std::string& text, int n_refs);

// True iff the memory fits the budget. Never truncates; compression is the
// reader's job and truncation is its fallback (see agents).
bool enforce_budget(const WorkingMemory& memory, const TokenBudget& budget);

// Fraction of references 1..N holding a non-empty note.
double retention_ratio(const WorkingMemory& memory, const TaskInstance& instance);

// Append-only reading history with set semantics for duplicate checks.
class ReadingHistory {
public:
    using Entry = std::pair<PaperId, SectionName>;

    void record(const Entry& item);  // throws DuplicateReadError
    bool contains(const Entry& item) const { return seen_.count(item) > 0; }
    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<Entry> entries_;
    std::set<Entry> seen_;
};

}  // namespace rwg
