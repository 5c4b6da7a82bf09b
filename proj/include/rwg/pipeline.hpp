#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rwg/agents.hpp"
#include "rwg/corpus.hpp"
#include "rwg/graph.hpp"
#include "rwg/llm.hpp"
#include "rwg/memory.hpp"
#include "rwg/metrics.hpp"
#include "rwg/selector.hpp"

namespace rwg {

struct AgentBackends {
    std::shared_ptr<LlmBackend> selector;  // may be null for SR / RR
    std::shared_ptr<LlmBackend> reader;
    std::shared_ptr<LlmBackend> writer;
};

struct RunConfig {
    SelectorKind selector;
    TokenBudget budget{};
    int max_steps = 0;  // 0 -> total section count (a run cannot exceed exhaustion anyway)
    std::string template_version = "v1";
    std::string template_dir;       // overrides the built-in templates when set
    bool writer_include_citing_abstract = true;
    std::string exemplar_override;  // text; empty -> built-in exemplar template
    bool strict_checks = true;      // in-loop invariant assertions

    GenerationParams selector_generation{0.0, 64};
    GenerationParams reader_generation{0.0, 4608};
    GenerationParams writer_generation{0.7, 2048};

    // JSON specs per agent, consumed by make_backend. Unused when backends
    // are injected directly.
    std::string selector_backend_spec;
    std::string reader_backend_spec;
    std::string writer_backend_spec;
    std::string base_dir;  // script_path resolution base
};

// Parses the declarative run config (see README for the key reference).
// ${VAR} in string values is replaced from the environment.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

struct RunTrace {
    std::vector<SelectorDecision> decisions;      // T reads + the final End
    std::vector<WorkingMemory> memory_snapshots;  // one per read step
    GeneratedRws final_rws;
    int step_count = 0;  // T
    BackendUsage selector_usage, reader_usage, writer_usage;
    std::vector<std::string> log_lines;  // JSON Lines records (schema rwg-log/1)
    ReadingHistory history;
};

using LogSink = std::function<void(const std::string& line)>;

// Executes the full loop: build graph if needed -> initial paper -> repeat
// {select; read; record} until End -> write. Log lines stream to the sink as
// they are produced, so an aborted run still leaves a usable partial log.
RunTrace run(const TaskInstance& instance, const RunConfig& config, const AgentBackends& backends,
             const LogSink& sink = {});
RunTrace run(const TaskInstance& instance, const RunConfig& config, const LogSink& sink = {});

struct ReadingStats {
    int reads = 0;
    int total_sections = 0;
    double proportion_read = 0.0;                // reads / total sections
    std::map<std::string, double> per_category;  // only categories the instance has
};

// Category of a section name per the keyword table; abstracts (index 1) are
// excluded from the per-category accounting since they are always provided.
std::string category_of(const SectionName& name);

ReadingStats reading_stats(const RunTrace& trace, const TaskInstance& instance);
ReadingStats reading_stats_from_log(const std::string& log_jsonl);  // uses the embedded catalog

// Side-by-side comparison of >= 2 corpus report JSON documents over the same
// corpus; rows ordered by config name. Throws MismatchedCorporaError when doc
// id sets differ.
std::string compare_reports_text(const std::vector<std::string>& report_jsons);
std::string compare_reports_csv(const std::vector<std::string>& report_jsons);

}  // namespace rwg
