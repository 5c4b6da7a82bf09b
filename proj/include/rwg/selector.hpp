#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rwg/corpus.hpp"
#include "rwg/graph.hpp"
#include "rwg/llm.hpp"
#include "rwg/memory.hpp"
#include "rwg/prompts.hpp"

namespace rwg {

struct SelectorDecision {
    enum class Kind { Read, End };

    Kind kind = Kind::End;
    PaperId paper = 0;    // valid when kind == Read
    SectionName section;  // valid when kind == Read

    static SelectorDecision read(PaperId paper, SectionName section) {
        return {Kind::Read, paper, std::move(section)};
    }
    static SelectorDecision end() { return {}; }
    bool is_read() const { return kind == Kind::Read; }

    bool operator==(const SelectorDecision&) const = default;
};

enum class SelectorStrategy { SR, RR, Vanilla, GraphCo, GraphCi };

struct SelectorKind {
    SelectorStrategy strategy = SelectorStrategy::SR;
    unsigned seed = 0;  // RR only

    bool is_graph() const {
        return strategy == SelectorStrategy::GraphCo || strategy == SelectorStrategy::GraphCi;
    }
    bool uses_backend() const { return strategy != SelectorStrategy::SR && strategy != SelectorStrategy::RR; }
};

SelectorStrategy selector_strategy_from_string(const std::string& name);  // ConfigError
std::string selector_strategy_name(SelectorStrategy s);

struct SelectorState {
    SelectorKind kind;
    std::optional<PaperId> cursor;  // graph kinds: position after the last Read
    std::vector<std::pair<PaperId, SectionName>> precomputed_order;  // SR / RR
    size_t next_index = 0;
};

// Everything a selector step may consult.
struct SelectorContext {
    const TaskInstance& instance;
    const WorkingMemory& memory;
    const ReadingHistory& history;
    const RelationGraph* graph = nullptr;  // required for graph kinds
    LlmBackend* backend = nullptr;         // required for Vanilla / graph kinds
    const PromptLibrary* prompts = nullptr;
    GenerationParams generation{0.0, 64};
};

// All sections in id-then-index order: the SR trace order.
std::vector<std::pair<PaperId, SectionName>> sequential_order(const TaskInstance& instance);
// Seeded Fisher-Yates shuffle of the sequential order.
std::vector<std::pair<PaperId, SectionName>> shuffled_order(const TaskInstance& instance, unsigned seed);

SelectorState make_selector_state(SelectorKind kind, const TaskInstance& instance);

// The paper the reading starts from. Graph kinds ask the backend, given the
// abstracts and the rendered graph; any invalid or unparseable choice falls
// back to paper 0. SR: 0. RR: the paper of the first shuffled entry.
// Vanilla: the paper of the backend's first pick.
PaperId initial_paper(SelectorKind kind, const TaskInstance& instance, const RelationGraph* graph,
                      LlmBackend* backend, const PromptLibrary& prompts,
                      const GenerationParams& generation = {0.0, 64});

// One selector step. The decision never repeats a history entry; for graph
// kinds it stays inside the cursor's one-hop member set. End is returned when
// every admissible section is read or the backend emits the termination
// symbol. Updates state (cursor <- chosen paper).
SelectorDecision next_decision(SelectorState& state, const SelectorContext& ctx);

// Parses a backend reply ("(paper, section)" or "<End>") and enforces the
// constraints, re-prompting with an error message up to 3 times; after that
// applies the deterministic fallback ladder (cursor paper's lowest unread
// section, then lowest-id admissible paper, then End).
SelectorDecision validate_and_repair(const std::string& raw, SelectorState& state,
                                     const SelectorContext& ctx, const std::string& system,
                                     const std::string& base_user);

}  // namespace rwg
