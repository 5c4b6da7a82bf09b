#include "rwg/graph.hpp"

#include <sstream>

#include "rwg/errors.hpp"

namespace rwg {

std::set<PaperId> RelationGraph::neighbors(PaperId id) const {
    std::set<PaperId> out;
    for (const auto& [from, to] : edges) {
        if (from == id) out.insert(to);
        if (to == id) out.insert(from);
    }
    out.erase(id);
    return out;
}

RelationGraph build_citation_graph(const TaskInstance& instance) {
    RelationGraph g;
    g.kind = GraphKind::Citation;
    g.n_refs = instance.n_refs();
    for (PaperId id = 0; id <= g.n_refs; ++id) {
        for (PaperId cited : instance.paper(id).cited_ids) {
            if (cited != id) g.edges.insert({id, cited});
        }
    }
    // The citing paper cites all references regardless of source data.
    for (PaperId j = 1; j <= g.n_refs; ++j) g.edges.insert({0, j});
    return g;
}

RelationGraph build_cooccurrence_graph(const TaskInstance& instance) {
    RelationGraph g;
    g.kind = GraphKind::Cooccurrence;
    g.n_refs = instance.n_refs();
    // Only the references' related-work sentences count; the citing paper has
    // no related-work section by construction.
    for (const auto& ref : instance.references) {
        for (const auto& sentence : ref.rws_sentences) {
            for (auto it = sentence.cites.begin(); it != sentence.cites.end(); ++it) {
                for (auto jt = std::next(it); jt != sentence.cites.end(); ++jt) {
                    g.edges.insert({*it, *jt});
                    g.edges.insert({*jt, *it});
                }
            }
        }
    }
    for (PaperId j = 1; j <= g.n_refs; ++j) {
        g.edges.insert({0, j});
        g.edges.insert({j, 0});
    }
    return g;
}

Neighborhood one_hop(const RelationGraph& graph, PaperId center) {
    if (!graph.has_node(center)) {
        throw UnknownNodeError("one_hop: unknown node " + std::to_string(center));
    }
    Neighborhood nb;
    nb.center = center;
    nb.members = graph.neighbors(center);
    nb.members.insert(center);
    for (const auto& e : graph.edges) {
        if (nb.members.count(e.first) && nb.members.count(e.second)) nb.edges.insert(e);
    }
    return nb;
}

static std::string render(const RelationGraph& graph, const std::vector<std::string>* labels) {
    std::ostringstream out;
    for (PaperId id = 0; id <= graph.n_refs; ++id) {
        if (id > 0) out << '\n';
        out << id;
        if (labels && static_cast<size_t>(id) < labels->size() && !(*labels)[id].empty()) {
            out << " (" << (*labels)[id] << ")";
        }
        out << ":";
        bool first = true;
        for (PaperId n : graph.neighbors(id)) {
            out << (first ? " " : ",") << n;
            first = false;
        }
    }
    return out.str();
}

std::string render_graph(const RelationGraph& graph) { return render(graph, nullptr); }

std::string render_graph(const RelationGraph& graph, const std::vector<std::string>& labels) {
    return render(graph, &labels);
}

std::string edges_tsv(const RelationGraph& graph) {
    std::ostringstream out;
    for (const auto& [from, to] : graph.edges) out << from << '\t' << to << '\n';
    return out.str();
}

}  // namespace rwg
