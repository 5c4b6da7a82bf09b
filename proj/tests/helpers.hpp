#pragma once

// Shared test utilities: fixture loading, random instance generation,
// programmable backends, and the independent oracles the suites check
// against.

#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwg/corpus.hpp"
#include "rwg/graph.hpp"
#include "rwg/llm.hpp"
#include "rwg/memory.hpp"
#include "rwg/metrics.hpp"
#include "rwg/selector.hpp"

namespace rwgtest {

inline std::string fixture_path(const std::string& name) {
    return std::string(RWG_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("test fixture missing: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// A backend whose replies come from a lambda; used where scripted matching
// is impractical (randomized suites).
class CallbackBackend : public rwg::LlmBackend {
public:
    using Fn = std::function<std::string(const rwg::ChatRequest&)>;
    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}

protected:
    std::string do_complete(const rwg::ChatRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

// ---- random instances -------------------------------------------------

inline rwg::TaskInstance random_instance(std::mt19937& rng, int min_papers = 3,
                                         int max_papers = 8, int min_sections = 2,
                                         int max_sections = 6, int max_sentences = 4) {
    static const std::vector<std::string> section_pool = {
        "Introduction", "Related Work", "Background",  "Method",     "Approach",
        "Model",        "Experiments",  "Results",     "Analysis",   "Evaluation",
        "Discussion",   "Conclusion",   "Future Work", "Appendix",   "Setup"};
    auto between = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
    };

    const int n_papers = between(min_papers, max_papers);
    const int n_refs = n_papers - 1;

    auto make_paper = [&](rwg::PaperId id) {
        rwg::Paper p;
        p.id = id;
        p.title = "Paper " + std::to_string(id);
        const int n_sections = between(min_sections, max_sections);
        std::vector<std::string> pool;
        for (const auto& name : section_pool) {
            // The citing paper never carries a related-work section.
            if (id == 0 && rwg::is_related_work_name(name)) continue;
            pool.push_back(name);
        }
        for (size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng() % i]);
        for (int s = 0; s < n_sections; ++s) {
            rwg::Section section;
            section.index = s + 1;
            section.name = s == 0 ? "Abstract" : pool[static_cast<size_t>(s - 1)];
            section.text = "body of paper " + std::to_string(id) + " section " +
                           std::to_string(s + 1);
            p.sections.push_back(std::move(section));
        }
        for (rwg::PaperId other = 1; other <= n_refs; ++other) {
            if (other != id && rng() % 3 == 0) p.cited_ids.insert(other);
        }
        return p;
    };

    rwg::TaskInstance inst;
    inst.citing = make_paper(0);
    for (rwg::PaperId id = 1; id <= n_refs; ++id) {
        rwg::Paper ref = make_paper(id);
        const int n_sentences = static_cast<int>(rng() % static_cast<unsigned>(max_sentences + 1));
        for (int s = 0; s < n_sentences; ++s) {
            rwg::RwsSentence sentence;
            sentence.text = "sentence " + std::to_string(s);
            const int cites = between(0, std::min(4, n_refs));
            for (int c = 0; c < cites; ++c) {
                sentence.cites.insert(1 + static_cast<int>(rng() % static_cast<unsigned>(n_refs)));
            }
            ref.rws_sentences.push_back(std::move(sentence));
        }
        inst.references.push_back(std::move(ref));
    }
    return inst;
}

// ---- independent oracles ----------------------------------------------

// Brute-force co-occurrence construction: test every unordered pair of nodes
// against every sentence of every reference, then add the forced hub edges.
inline rwg::RelationGraph oracle_cooccurrence(const rwg::TaskInstance& inst) {
    rwg::RelationGraph g;
    g.kind = rwg::GraphKind::Cooccurrence;
    g.n_refs = inst.n_refs();
    for (rwg::PaperId i = 0; i <= g.n_refs; ++i) {
        for (rwg::PaperId j = 0; j <= g.n_refs; ++j) {
            if (i >= j) continue;
            bool joint = false;
            for (const auto& ref : inst.references) {
                for (const auto& sentence : ref.rws_sentences) {
                    if (sentence.cites.count(i) && sentence.cites.count(j)) joint = true;
                }
            }
            if (joint) {
                g.edges.insert({i, j});
                g.edges.insert({j, i});
            }
        }
    }
    for (rwg::PaperId j = 1; j <= g.n_refs; ++j) {
        g.edges.insert({0, j});
        g.edges.insert({j, 0});
    }
    return g;
}

// Brute-force eval-graph metrics: edge count by size, degrees by scanning all
// pairs, triangles by scanning all node triples.
inline rwg::GraphMetrics oracle_metrics(const rwg::EvalGraph& g) {
    rwg::GraphMetrics m;
    m.edge_count = static_cast<int>(g.edges.size());
    const int n = g.n_refs;
    if (n == 0) return m;

    auto connected = [&](int a, int b) {
        return g.edges.count({std::min(a, b), std::max(a, b)}) > 0;
    };
    std::vector<int> degree(static_cast<size_t>(n) + 1, 0);
    for (int v = 1; v <= n; ++v) {
        for (int u = 1; u <= n; ++u) {
            if (u != v && connected(u, v)) ++degree[static_cast<size_t>(v)];
        }
    }
    long degree_sum = 0;
    for (int v = 1; v <= n; ++v) degree_sum += degree[static_cast<size_t>(v)];
    m.avg_node_degree = static_cast<double>(degree_sum) / n;

    double total = 0.0;
    for (int v = 1; v <= n; ++v) {
        const int d = degree[static_cast<size_t>(v)];
        if (d < 2) continue;
        long triangles = 0;
        for (int a = 1; a <= n; ++a) {
            for (int b = a + 1; b <= n; ++b) {
                if (a == v || b == v) continue;
                if (connected(v, a) && connected(v, b) && connected(a, b)) ++triangles;
            }
        }
        total += static_cast<double>(triangles) / (static_cast<double>(d) * (d - 1) / 2.0);
    }
    m.clustering_coefficient = total / n;
    return m;
}

// Runs a backend-free selector (SR / RR) to exhaustion and returns its reads.
inline std::vector<std::pair<rwg::PaperId, rwg::SectionName>> drive_selector(
    rwg::SelectorKind kind, const rwg::TaskInstance& inst) {
    rwg::SelectorState state = rwg::make_selector_state(kind, inst);
    rwg::WorkingMemory memory;
    memory.refresh(rwg::default_estimator());
    rwg::ReadingHistory history;
    rwg::SelectorContext ctx{inst, memory, history, nullptr, nullptr, nullptr, {0.0, 64}};

    std::vector<std::pair<rwg::PaperId, rwg::SectionName>> reads;
    while (true) {
        const rwg::SelectorDecision d = rwg::next_decision(state, ctx);
        if (!d.is_read()) break;
        reads.emplace_back(d.paper, d.section);
        history.record({d.paper, d.section});
    }
    return reads;
}

// Random simple undirected graph over 1..n_refs.
inline rwg::EvalGraph random_eval_graph(std::mt19937& rng, int max_nodes = 12) {
    rwg::EvalGraph g;
    g.n_refs = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_nodes));
    for (int i = 1; i <= g.n_refs; ++i) {
        for (int j = i + 1; j <= g.n_refs; ++j) {
            if (rng() % 3 == 0) g.edges.insert({i, j});
        }
    }
    return g;
}

}  // namespace rwgtest
