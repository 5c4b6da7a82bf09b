#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rwg/agents.hpp"
#include "rwg/corpus.hpp"
#include "rwg/llm.hpp"
#include "rwg/prompts.hpp"

namespace rwg {

// Undirected simple graph over the references 1..N (isolated nodes included).
struct EvalGraph {
    int n_refs = 0;
    std::set<std::pair<int, int>> edges;  // stored with first < second

    bool operator==(const EvalGraph&) const = default;
};

// Edge {i, j} iff some sentence of the rws cites both; markers outside 1..N
// are ignored.
EvalGraph build_eval_graph(const GeneratedRws& rws, int n_refs);

struct GraphMetrics {
    int edge_count = 0;
    double avg_node_degree = 0.0;        // 2|E| / |V|
    double clustering_coefficient = 0.0; // mean local coefficient, degree<2 nodes contribute 0
};

GraphMetrics compute_metrics(const EvalGraph& graph);

enum class JudgeRubric { Coverage, Logic, Relevance };

const char* rubric_name(JudgeRubric rubric);

// One chain-of-thought judging call for one criterion; the reply is parsed
// for the last integer in 1..5. One re-prompt on an unparseable reply, then
// UnparseableScoreError.
int judge(const GeneratedRws& rws, const TaskInstance& instance, LlmBackend& backend,
          JudgeRubric rubric, const PromptLibrary& prompts,
          const GenerationParams& generation = {0.0, 1024});

struct JudgeScore {
    std::string judge_name;
    int coverage = 0;
    int logic = 0;
    int relevance = 0;
    double overall = 0.0;  // (coverage + logic + relevance) / 3
};

JudgeScore judge_document(const GeneratedRws& rws, const TaskInstance& instance,
                          LlmBackend& backend, const std::string& judge_name,
                          const PromptLibrary& prompts,
                          const GenerationParams& generation = {0.0, 1024});

struct DocumentEval {
    std::string doc_id;
    GraphMetrics metrics;
    std::vector<JudgeScore> judges;
};

struct JudgeMeans {
    double coverage = 0.0;
    double logic = 0.0;
    double relevance = 0.0;
    double overall = 0.0;
};

struct GraphMetricsMeans {
    double edge_count = 0.0;
    double avg_node_degree = 0.0;
    double clustering_coefficient = 0.0;
};

struct CorpusReport {
    std::vector<DocumentEval> per_document;  // document order preserved
    GraphMetricsMeans means;
    std::optional<JudgeMeans> judge_means;   // absent when no document was judged
};

// Arithmetic means over documents (and over judges x documents for the judge
// criteria). Throws EmptyCorpusError.
CorpusReport aggregate(const std::vector<DocumentEval>& per_document);

// "doc_id,edges,degree,clustering,coverage,logic,relevance,overall" rows;
// judge cells are empty when a document has no judge scores.
std::string report_csv(const CorpusReport& report);

// Corpus summary as JSON text (schema rwg-report/1).
std::string report_json(const CorpusReport& report, const std::string& config_name);

}  // namespace rwg
