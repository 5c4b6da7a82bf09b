#include "rwg/metrics.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

using nlohmann::json;

EvalGraph build_eval_graph(const GeneratedRws& rws, int n_refs) {
    EvalGraph g;
    g.n_refs = n_refs;
    for (const auto& [sentence, ids] : parse_citations(rws.text)) {
        (void)sentence;
        for (auto it = ids.begin(); it != ids.end(); ++it) {
            if (*it < 1 || *it > n_refs) continue;
            for (auto jt = std::next(it); jt != ids.end(); ++jt) {
                if (*jt < 1 || *jt > n_refs) continue;
                g.edges.insert({*it, *jt});  // set iteration is ascending, so first < second
            }
        }
    }
    return g;
}

GraphMetrics compute_metrics(const EvalGraph& graph) {
    GraphMetrics m;
    m.edge_count = static_cast<int>(graph.edges.size());
    const int n = graph.n_refs;
    if (n == 0) return m;
    m.avg_node_degree = 2.0 * m.edge_count / n;

    std::map<int, std::set<int>> adj;
    for (const auto& [a, b] : graph.edges) {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    double total = 0.0;
    for (int v = 1; v <= n; ++v) {
        const auto it = adj.find(v);
        if (it == adj.end() || it->second.size() < 2) continue;  // degree < 2 contributes 0
        const auto& nbrs = it->second;
        const size_t deg = nbrs.size();
        long triangles = 0;
        for (auto a = nbrs.begin(); a != nbrs.end(); ++a) {
            for (auto b = std::next(a); b != nbrs.end(); ++b) {
                const int x = std::min(*a, *b), y = std::max(*a, *b);
                if (graph.edges.count({x, y})) ++triangles;
            }
        }
        total += static_cast<double>(triangles) / (static_cast<double>(deg) * (deg - 1) / 2.0);
    }
    m.clustering_coefficient = total / n;
    return m;
}

const char* rubric_name(JudgeRubric rubric) {
    switch (rubric) {
        case JudgeRubric::Coverage: return "Coverage";
        case JudgeRubric::Logic: return "Logic";
        case JudgeRubric::Relevance: return "Relevance";
    }
    return "?";
}

namespace {

constexpr const char* kJudgeSystem =
    "You are an impartial evaluator of related work sections in academic papers.";

const char* rubric_question(JudgeRubric r) {
    switch (r) {
        case JudgeRubric::Coverage:
            return "Coverage: does the related work section cover all key topics and provide a "
                   "detailed and thorough discussion of the references?";
        case JudgeRubric::Logic:
            return "Logic: is the section tightly structured and logically coherent, with "
                   "content arranged in a clear and reasonable manner?";
        case JudgeRubric::Relevance:
            return "Relevance: does the section align with all papers and avoid hallucinations "
                   "or factual inaccuracies?";
    }
    return "";
}

const char* rubric_anchors(JudgeRubric r) {
    switch (r) {
        case JudgeRubric::Coverage:
            return "1: Most references are missing or mentioned without any substance.\n"
                   "2: Several key topics or references are absent; discussion is superficial.\n"
                   "3: Most references appear, but some topics get only a passing mention.\n"
                   "4: All key topics are present with adequate discussion; minor gaps only.\n"
                   "5: Every key topic and reference is discussed thoroughly and in depth.";
        case JudgeRubric::Logic:
            return "1: A disconnected list of papers with no discernible organization.\n"
                   "2: Weak structure; groupings are arbitrary and transitions are abrupt.\n"
                   "3: A recognizable organization, but some passages feel out of place.\n"
                   "4: Clear grouping and ordering with mostly smooth transitions.\n"
                   "5: Tightly structured throughout; every paragraph builds on the previous one.";
        case JudgeRubric::Relevance:
            return "1: Largely misrepresents the references or discusses unrelated work.\n"
                   "2: Multiple factual errors or claims not supported by the references.\n"
                   "3: Mostly faithful, with a few questionable or unsupported statements.\n"
                   "4: Faithful to the references; at most one minor inaccuracy.\n"
                   "5: Every statement is accurate and clearly grounded in the references.";
    }
    return "";
}

std::string judge_context(const TaskInstance& instance) {
    std::ostringstream out;
    for (PaperId id = 0; id <= instance.n_refs(); ++id) {
        const Paper& p = instance.paper(id);
        out << "Paper " << id;
        if (id == 0) out << " (the paper being written)";
        if (!p.title.empty()) out << ": " << p.title;
        out << "\n  Abstract: " << p.abstract_text() << "\n";
    }
    return out.str();
}

// Last integer in 1..5 mentioned in the reply, if any.
std::optional<int> parse_score(const std::string& reply) {
    std::optional<int> score;
    size_t i = 0;
    while (i < reply.size()) {
        if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
            ++i;
            continue;
        }
        size_t end = i;
        while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
        if (end - i == 1) {
            const int value = reply[i] - '0';
            if (value >= 1 && value <= 5) score = value;
        }
        i = end;
    }
    return score;
}

}  // namespace

int judge(const GeneratedRws& rws, const TaskInstance& instance, LlmBackend& backend,
          JudgeRubric rubric, const PromptLibrary& prompts, const GenerationParams& generation) {
    ChatRequest req;
    req.system = kJudgeSystem;
    req.user = render_template(prompts.get("judge"),
                               {{"criterion", rubric_name(rubric)},
                                {"criterion_question", rubric_question(rubric)},
                                {"anchors", rubric_anchors(rubric)},
                                {"context", judge_context(instance)},
                                {"rws", rws.text}});
    req.temperature = generation.temperature;
    req.max_reply_tokens = generation.max_reply_tokens;

    auto score = parse_score(backend.complete(req));
    if (!score.has_value()) {
        ChatRequest retry = req;
        retry.user += "\n\nYour previous reply did not end with a score between 1 and 5. Repeat "
                      "your verdict as \"Final score: <n>\" with n between 1 and 5.";
        score = parse_score(backend.complete(retry));
    }
    if (!score.has_value()) {
        throw UnparseableScoreError(std::string("judge reply for ") + rubric_name(rubric) +
                                    " contains no score in 1..5");
    }
    return *score;
}

JudgeScore judge_document(const GeneratedRws& rws, const TaskInstance& instance,
                          LlmBackend& backend, const std::string& judge_name,
                          const PromptLibrary& prompts, const GenerationParams& generation) {
    JudgeScore s;
    s.judge_name = judge_name;
    s.coverage = judge(rws, instance, backend, JudgeRubric::Coverage, prompts, generation);
    s.logic = judge(rws, instance, backend, JudgeRubric::Logic, prompts, generation);
    s.relevance = judge(rws, instance, backend, JudgeRubric::Relevance, prompts, generation);
    s.overall = (s.coverage + s.logic + s.relevance) / 3.0;
    return s;
}

CorpusReport aggregate(const std::vector<DocumentEval>& per_document) {
    if (per_document.empty()) throw EmptyCorpusError("no documents to aggregate");

    CorpusReport report;
    report.per_document = per_document;

    double edges = 0, degree = 0, clustering = 0;
    for (const auto& doc : per_document) {
        edges += doc.metrics.edge_count;
        degree += doc.metrics.avg_node_degree;
        clustering += doc.metrics.clustering_coefficient;
    }
    const double n_docs = static_cast<double>(per_document.size());
    report.means = {edges / n_docs, degree / n_docs, clustering / n_docs};

    double cov = 0, log = 0, rel = 0;
    long n_scores = 0;
    for (const auto& doc : per_document) {
        for (const auto& js : doc.judges) {
            cov += js.coverage;
            log += js.logic;
            rel += js.relevance;
            ++n_scores;
        }
    }
    if (n_scores > 0) {
        JudgeMeans jm;
        jm.coverage = cov / n_scores;
        jm.logic = log / n_scores;
        jm.relevance = rel / n_scores;
        jm.overall = (jm.coverage + jm.logic + jm.relevance) / 3.0;
        report.judge_means = jm;
    }
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string report_csv(const CorpusReport& report) {
    std::ostringstream out;
    out << "doc_id,edges,degree,clustering,coverage,logic,relevance,overall\n";
    for (const auto& doc : report.per_document) {
        out << doc.doc_id << ',' << doc.metrics.edge_count << ','
            << fmt(doc.metrics.avg_node_degree) << ',' << fmt(doc.metrics.clustering_coefficient);
        if (doc.judges.empty()) {
            out << ",,,,";
        } else {
            double cov = 0, log = 0, rel = 0;
            for (const auto& js : doc.judges) {
                cov += js.coverage;
                log += js.logic;
                rel += js.relevance;
            }
            const double n = static_cast<double>(doc.judges.size());
            out << ',' << fmt(cov / n) << ',' << fmt(log / n) << ',' << fmt(rel / n) << ','
                << fmt((cov + log + rel) / (3.0 * n));
        }
        out << '\n';
    }
    return out.str();
}

std::string report_json(const CorpusReport& report, const std::string& config_name) {
    json j;
    j["schema"] = "rwg-report/1";
    j["config_name"] = config_name;
    json docs = json::array();
    json ids = json::array();
    for (const auto& doc : report.per_document) {
        ids.push_back(doc.doc_id);
        json d;
        d["doc_id"] = doc.doc_id;
        d["edges"] = doc.metrics.edge_count;
        d["degree"] = doc.metrics.avg_node_degree;
        d["clustering"] = doc.metrics.clustering_coefficient;
        json judges = json::array();
        for (const auto& js : doc.judges) {
            judges.push_back({{"judge", js.judge_name},
                              {"coverage", js.coverage},
                              {"logic", js.logic},
                              {"relevance", js.relevance},
                              {"overall", js.overall}});
        }
        d["judges"] = std::move(judges);
        docs.push_back(std::move(d));
    }
    j["doc_ids"] = std::move(ids);
    j["per_document"] = std::move(docs);
    j["means"] = {{"edges", report.means.edge_count},
                  {"degree", report.means.avg_node_degree},
                  {"clustering", report.means.clustering_coefficient}};
    if (report.judge_means.has_value()) {
        j["judge_means"] = {{"coverage", report.judge_means->coverage},
                            {"logic", report.judge_means->logic},
                            {"relevance", report.judge_means->relevance},
                            {"overall", report.judge_means->overall}};
    } else {
        j["judge_means"] = nullptr;
    }
    return j.dump(2);
}

}  // namespace rwg
