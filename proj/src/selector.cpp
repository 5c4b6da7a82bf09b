#include "rwg/selector.hpp"

#include <algorithm>
#include <random>

#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

namespace {

constexpr const char* kSelectorSystem =
    "You are the section selector of a related-work writing workflow.";
constexpr int kMaxRepairAttempts = 3;

}  // namespace

SelectorStrategy selector_strategy_from_string(const std::string& name) {
    const std::string n = detail::to_lower(detail::trim(name));
    if (n == "sr") return SelectorStrategy::SR;
    if (n == "rr") return SelectorStrategy::RR;
    if (n == "vanilla") return SelectorStrategy::Vanilla;
    if (n == "graph-co" || n == "graphco") return SelectorStrategy::GraphCo;
    if (n == "graph-ci" || n == "graphci") return SelectorStrategy::GraphCi;
    throw ConfigError("unknown selector strategy \"" + name + "\"");
}

std::string selector_strategy_name(SelectorStrategy s) {
    switch (s) {
        case SelectorStrategy::SR: return "SR";
        case SelectorStrategy::RR: return "RR";
        case SelectorStrategy::Vanilla: return "Vanilla";
        case SelectorStrategy::GraphCo: return "Graph-Co";
        case SelectorStrategy::GraphCi: return "Graph-Ci";
    }
    return "?";
}

std::vector<std::pair<PaperId, SectionName>> sequential_order(const TaskInstance& instance) {
    std::vector<std::pair<PaperId, SectionName>> order;
    for (PaperId id = 0; id <= instance.n_refs(); ++id) {
        for (const auto& s : instance.paper(id).sections) order.emplace_back(id, s.name);
    }
    return order;
}

std::vector<std::pair<PaperId, SectionName>> shuffled_order(const TaskInstance& instance,
                                                            unsigned seed) {
    auto order = sequential_order(instance);
    // Explicit Fisher-Yates: the mt19937 stream is standardized, so traces
    // reproduce for a given seed on any platform.
    std::mt19937 rng(seed);
    for (size_t i = order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

SelectorState make_selector_state(SelectorKind kind, const TaskInstance& instance) {
    SelectorState state;
    state.kind = kind;
    if (kind.strategy == SelectorStrategy::SR) {
        state.precomputed_order = sequential_order(instance);
    } else if (kind.strategy == SelectorStrategy::RR) {
        state.precomputed_order = shuffled_order(instance, kind.seed);
    }
    return state;
}

namespace {

// Parses "(paper_id, section name)" or the termination symbol. Tolerates
// prose around the tuple.
std::optional<SelectorDecision> parse_selector_reply(const std::string& raw) {
    const std::string reply = detail::trim(raw);
    if (detail::to_lower(reply) == "<end>") return SelectorDecision::end();

    for (size_t open = reply.find('('); open != std::string::npos;
         open = reply.find('(', open + 1)) {
        const size_t close = reply.find(')', open + 1);
        if (close == std::string::npos) break;
        const std::string inner = reply.substr(open + 1, close - open - 1);
        const size_t comma = inner.find(',');
        if (comma == std::string::npos) continue;
        const std::string id_text = detail::trim(inner.substr(0, comma));
        const std::string section = detail::trim(inner.substr(comma + 1));
        if (!detail::all_digits(id_text) || section.empty()) continue;
        return SelectorDecision::read(std::stoi(id_text), section);
    }
    if (detail::icontains(reply, "<end>")) return SelectorDecision::end();
    return std::nullopt;
}

bool section_exists(const TaskInstance& instance, PaperId paper, const SectionName& section) {
    if (paper < 0 || paper > instance.n_refs()) return false;
    return instance.paper(paper).find_section(section) != nullptr;
}

// Lowest-index unread section of one paper, if any.
std::optional<SectionName> first_unread_section(const TaskInstance& instance, PaperId paper,
                                                const ReadingHistory& history) {
    for (const auto& s : instance.paper(paper).sections) {
        if (!history.contains({paper, s.name})) return s.name;
    }
    return std::nullopt;
}

// The papers a decision may target at this step: the one-hop member set for
// graph kinds with a cursor, every paper otherwise.
std::set<PaperId> admissible_papers(const SelectorState& state, const SelectorContext& ctx) {
    if (state.kind.is_graph() && state.cursor.has_value()) {
        return one_hop(*ctx.graph, *state.cursor).members;
    }
    std::set<PaperId> all;
    for (PaperId id = 0; id <= ctx.instance.n_refs(); ++id) all.insert(id);
    return all;
}

bool has_unread(const TaskInstance& instance, const std::set<PaperId>& papers,
                const ReadingHistory& history) {
    return std::any_of(papers.begin(), papers.end(), [&](PaperId id) {
        return first_unread_section(instance, id, history).has_value();
    });
}

// Empty string when valid, otherwise the reason sent back to the backend.
std::string violation_reason(const SelectorDecision& d, const SelectorState& state,
                             const SelectorContext& ctx, const std::set<PaperId>& admissible) {
    if (!d.is_read()) return {};
    if (!section_exists(ctx.instance, d.paper, d.section)) {
        return "paper " + std::to_string(d.paper) + " has no section named \"" + d.section +
               "\"";
    }
    if (ctx.history.contains({d.paper, d.section})) {
        return "(" + std::to_string(d.paper) + ", " + d.section +
               ") is already in the reading history";
    }
    if (state.kind.is_graph() && state.cursor.has_value() && !admissible.count(d.paper)) {
        return "paper " + std::to_string(d.paper) + " is not the current paper " +
               std::to_string(*state.cursor) + " or one of its neighbors";
    }
    return {};
}

// Deterministic fallback once repair attempts are spent: the cursor paper's
// lowest unread section, then the lowest-id admissible paper with one, then
// End.
SelectorDecision fallback_ladder(const SelectorState& state, const SelectorContext& ctx,
                                 const std::set<PaperId>& admissible) {
    if (state.cursor.has_value()) {
        if (auto s = first_unread_section(ctx.instance, *state.cursor, ctx.history)) {
            return SelectorDecision::read(*state.cursor, *s);
        }
    }
    for (PaperId id : admissible) {
        if (auto s = first_unread_section(ctx.instance, id, ctx.history)) {
            return SelectorDecision::read(id, *s);
        }
    }
    return SelectorDecision::end();
}

std::string prompt_values_graph(const SelectorState& state, const SelectorContext& ctx,
                                std::map<std::string, std::string>& values) {
    values["graph"] = render_graph(*ctx.graph, paper_titles(ctx.instance));
    if (state.cursor.has_value()) {
        values["cursor"] = std::to_string(*state.cursor);
        values["neighborhood"] = render_neighborhood_block(one_hop(*ctx.graph, *state.cursor));
    } else {
        values["cursor"] = "(not placed yet)";
        values["neighborhood"] = "current paper: none; admissible papers: any";
    }
    return ctx.prompts->get("selector_graph");
}

}  // namespace

SelectorDecision validate_and_repair(const std::string& raw, SelectorState& state,
                                     const SelectorContext& ctx, const std::string& system,
                                     const std::string& base_user) {
    const std::set<PaperId> admissible = admissible_papers(state, ctx);
    std::string reply = raw;
    for (int attempt = 0;; ++attempt) {
        const auto parsed = parse_selector_reply(reply);
        std::string reason;
        if (!parsed.has_value()) {
            reason = "the reply could not be parsed as (paper_id, section name) or <End>";
        } else {
            reason = violation_reason(*parsed, state, ctx, admissible);
        }
        if (reason.empty()) {
            if (parsed->is_read()) state.cursor = parsed->paper;
            return *parsed;
        }
        if (attempt >= kMaxRepairAttempts) break;
        ChatRequest repair;
        repair.system = system;
        repair.user = base_user + "\n\nYour previous reply \"" + detail::trim(reply) +
                      "\" is invalid: " + reason +
                      ". Reply again, following the rules exactly.";
        repair.temperature = ctx.generation.temperature;
        repair.max_reply_tokens = ctx.generation.max_reply_tokens;
        reply = ctx.backend->complete(repair);
    }
    SelectorDecision fallback = fallback_ladder(state, ctx, admissible);
    if (fallback.is_read()) state.cursor = fallback.paper;
    return fallback;
}

PaperId initial_paper(SelectorKind kind, const TaskInstance& instance, const RelationGraph* graph,
                      LlmBackend* backend, const PromptLibrary& prompts,
                      const GenerationParams& generation) {
    switch (kind.strategy) {
        case SelectorStrategy::SR:
            return 0;
        case SelectorStrategy::RR: {
            const auto order = shuffled_order(instance, kind.seed);
            return order.empty() ? 0 : order.front().first;
        }
        case SelectorStrategy::Vanilla: {
            // Definitional: the paper of the backend's first pick. The
            // pipeline never calls this for Vanilla; the first decision is
            // that pick.
            if (!backend) return 0;
            ChatRequest req;
            req.system = kSelectorSystem;
            req.user = render_template(prompts.get("selector_vanilla"),
                                       {{"abstracts", render_abstracts_block(instance)},
                                        {"memory", serialize_memory(WorkingMemory{})},
                                        {"history", "(nothing read yet)"}});
            req.temperature = generation.temperature;
            req.max_reply_tokens = generation.max_reply_tokens;
            const auto parsed = parse_selector_reply(backend->complete(req));
            if (parsed.has_value() && parsed->is_read() && parsed->paper >= 0 &&
                parsed->paper <= instance.n_refs()) {
                return parsed->paper;
            }
            return 0;
        }
        case SelectorStrategy::GraphCo:
        case SelectorStrategy::GraphCi: {
            if (!graph || !backend) return 0;
            ChatRequest req;
            req.system = kSelectorSystem;
            req.user = render_template(prompts.get("selector_initial"),
                                       {{"abstracts", render_abstracts_block(instance)},
                                        {"graph", render_graph(*graph, paper_titles(instance))}});
            req.temperature = generation.temperature;
            req.max_reply_tokens = generation.max_reply_tokens;
            const std::string reply = detail::trim(backend->complete(req));
            // Expect a bare id; tolerate surrounding text by taking the first
            // integer token.
            std::string digits;
            for (char c : reply) {
                if (std::isdigit(static_cast<unsigned char>(c))) {
                    digits.push_back(c);
                } else if (!digits.empty()) {
                    break;
                }
            }
            if (!digits.empty() && digits.size() <= 6) {
                const int id = std::stoi(digits);
                if (id >= 0 && id <= instance.n_refs()) return id;
            }
            return 0;  // fallback absorbs invalid or absent choices
        }
    }
    return 0;
}

SelectorDecision next_decision(SelectorState& state, const SelectorContext& ctx) {
    const SelectorStrategy strategy = state.kind.strategy;

    if (strategy == SelectorStrategy::SR || strategy == SelectorStrategy::RR) {
        while (state.next_index < state.precomputed_order.size()) {
            const auto& entry = state.precomputed_order[state.next_index];
            ++state.next_index;
            if (ctx.history.contains(entry)) continue;
            state.cursor = entry.first;
            return SelectorDecision::read(entry.first, entry.second);
        }
        return SelectorDecision::end();
    }

    if (state.kind.is_graph() && (!ctx.graph || ctx.graph->kind !=
        (strategy == SelectorStrategy::GraphCo ? GraphKind::Cooccurrence : GraphKind::Citation))) {
        throw ConfigError("graph selector needs a matching relation graph");
    }
    if (!ctx.backend || !ctx.prompts) {
        throw ConfigError("this selector strategy needs a backend and prompt templates");
    }

    // Forced End when nothing admissible is left. For graph kinds this honors
    // the one-hop constraint over completeness: unread sections may remain
    // outside the neighborhood.
    const std::set<PaperId> admissible = admissible_papers(state, ctx);
    if (!has_unread(ctx.instance, admissible, ctx.history)) return SelectorDecision::end();

    std::map<std::string, std::string> values = {
        {"abstracts", render_abstracts_block(ctx.instance)},
        {"memory", serialize_memory(ctx.memory)},
        {"history", render_history_block(ctx.history)},
    };
    std::string tpl;
    if (state.kind.is_graph()) {
        tpl = prompt_values_graph(state, ctx, values);
    } else {
        tpl = ctx.prompts->get("selector_vanilla");
    }
    ChatRequest req;
    req.system = kSelectorSystem;
    req.user = render_template(tpl, values);
    req.temperature = ctx.generation.temperature;
    req.max_reply_tokens = ctx.generation.max_reply_tokens;
    const std::string raw = ctx.backend->complete(req);
    return validate_and_repair(raw, state, ctx, kSelectorSystem, req.user);
}

}  // namespace rwg
