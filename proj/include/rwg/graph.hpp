#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rwg/corpus.hpp"

namespace rwg {

enum class GraphKind { Citation, Cooccurrence };

// Directed relation graph over the papers of one instance. Nodes are always
// exactly {0..n_refs}; paper 0 is adjacent to every reference in both kinds.
struct RelationGraph {
    GraphKind kind = GraphKind::Citation;
    int n_refs = 0;
    std::set<std::pair<PaperId, PaperId>> edges;  // no self-loops

    bool has_node(PaperId id) const { return id >= 0 && id <= n_refs; }
    bool has_edge(PaperId from, PaperId to) const { return edges.count({from, to}) > 0; }
    bool adjacent(PaperId a, PaperId b) const { return has_edge(a, b) || has_edge(b, a); }
    std::set<PaperId> neighbors(PaperId id) const;  // union of in/out, self excluded

    bool operator==(const RelationGraph&) const = default;
};

// One-hop subgraph around a center: the center, every in/out neighbor, and
// the induced edge set.
struct Neighborhood {
    PaperId center = 0;
    std::set<PaperId> members;
    std::set<std::pair<PaperId, PaperId>> edges;
};

// Edge (i, j) iff paper i cites paper j, plus (0, j) for every reference j.
RelationGraph build_citation_graph(const TaskInstance& instance);

// Symmetric edge pair {(i, j), (j, i)} iff some reference's related-work
// sentence cites both i and j, plus {(0, j), (j, 0)} for every reference j.
RelationGraph build_cooccurrence_graph(const TaskInstance& instance);

Neighborhood one_hop(const RelationGraph& graph, PaperId center);  // throws UnknownNodeError

// Deterministic adjacency-list rendering, e.g. "0: 1,2,3\n1: 0\n...".
// Adjacency is the in/out union; ids ascend in rows and within rows. When
// labels are given (indexed by id) each row is annotated with its label.
std::string render_graph(const RelationGraph& graph);
std::string render_graph(const RelationGraph& graph, const std::vector<std::string>& labels);

// "src<TAB>dst" lines, ascending. Debug export format.
std::string edges_tsv(const RelationGraph& graph);

}  // namespace rwg
