#include "rwg/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rwg/errors.hpp"
#include "text_util.hpp"

namespace rwg {

using nlohmann::json;

namespace {

// ${VAR} in string values is replaced from the environment; a missing
// variable is a config error so secrets never silently become empty.
std::string interpolate_env(const std::string& value) {
    std::string out;
    size_t pos = 0;
    while (pos < value.size()) {
        const size_t open = value.find("${", pos);
        if (open == std::string::npos) {
            out += value.substr(pos);
            break;
        }
        const size_t close = value.find('}', open + 2);
        if (close == std::string::npos) {
            out += value.substr(pos);
            break;
        }
        out += value.substr(pos, open - pos);
        const std::string var = value.substr(open + 2, close - open - 2);
        const char* v = std::getenv(var.c_str());
        if (!v) throw ConfigError("environment variable " + var + " is not set");
        out += v;
        pos = close + 1;
    }
    return out;
}

void interpolate_tree(json& j) {
    if (j.is_string()) {
        j = interpolate_env(j.get<std::string>());
    } else if (j.is_object() || j.is_array()) {
        for (auto& child : j) interpolate_tree(child);
    }
}

GenerationParams generation_from(const json& j, const char* temp_key, const char* tokens_key,
                                 GenerationParams defaults) {
    GenerationParams g = defaults;
    if (j.contains(temp_key)) g.temperature = j[temp_key].get<double>();
    if (j.contains(tokens_key)) g.max_reply_tokens = j[tokens_key].get<int>();
    return g;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    interpolate_tree(j);

    RunConfig cfg;
    cfg.base_dir = base_dir;
    try {
        cfg.selector.strategy =
            selector_strategy_from_string(j.value("selector", std::string("SR")));
        cfg.selector.seed = j.value("seed", 0u);
        cfg.budget = TokenBudget(j.value("budget_tokens", 4096));
        cfg.max_steps = j.value("max_steps", 0);
        cfg.template_version = j.value("template_version", std::string("v1"));
        cfg.template_dir = j.value("template_dir", std::string());
        cfg.writer_include_citing_abstract = j.value("writer_include_citing_abstract", true);
        cfg.strict_checks = j.value("strict_checks", true);

        if (j.contains("exemplar_path")) {
            std::string path = j["exemplar_path"].get<std::string>();
            if (!path.empty() && path.front() != '/' && !base_dir.empty()) {
                path = base_dir + "/" + path;
            }
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("cannot open exemplar file: " + path);
            std::stringstream buf;
            buf << in.rdbuf();
            cfg.exemplar_override = buf.str();
        }

        const json gen = j.value("generation", json::object());
        cfg.selector_generation =
            generation_from(gen, "selector_temperature", "selector_max_tokens", {0.0, 64});
        cfg.reader_generation = generation_from(gen, "reader_temperature", "reader_max_tokens",
                                                {0.0, cfg.budget.limit + 512});
        cfg.writer_generation =
            generation_from(gen, "writer_temperature", "writer_max_tokens", {0.7, 2048});

        // One "backend" spec covers all three agents; "backends" overrides
        // per agent.
        std::string common;
        if (j.contains("backend")) common = j["backend"].dump();
        cfg.selector_backend_spec = common;
        cfg.reader_backend_spec = common;
        cfg.writer_backend_spec = common;
        if (j.contains("backends")) {
            const json& b = j["backends"];
            if (b.contains("selector")) cfg.selector_backend_spec = b["selector"].dump();
            if (b.contains("reader")) cfg.reader_backend_spec = b["reader"].dump();
            if (b.contains("writer")) cfg.writer_backend_spec = b["writer"].dump();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string dir = ".";
    const size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return parse_run_config(buf.str(), dir);
}

namespace {

json memory_to_json(const WorkingMemory& mem) {
    json notes = json::object();
    for (const auto& [id, note] : mem.per_paper_notes) notes[std::to_string(id)] = note;
    json j;
    j["per_paper_notes"] = std::move(notes);
    j["relationship_notes"] = mem.relationship_notes;
    j["scratch"] = mem.scratch;
    return j;
}

json decision_to_json(const SelectorDecision& d) {
    if (!d.is_read()) return {{"kind", "end"}};
    return {{"kind", "read"}, {"paper", d.paper}, {"section", d.section}};
}

class RunLogger {
public:
    RunLogger(RunTrace& trace, const LogSink& sink) : trace_(trace), sink_(sink) {}

    void emit(const json& record) {
        std::string line = record.dump();
        if (sink_) sink_(line);
        trace_.log_lines.push_back(std::move(line));
    }

private:
    RunTrace& trace_;
    const LogSink& sink_;
};

}  // namespace

RunTrace run(const TaskInstance& instance, const RunConfig& config, const AgentBackends& backends,
             const LogSink& sink) {
    const int total = instance.total_sections();
    const int max_steps = config.max_steps > 0 ? std::min(config.max_steps, total) : total;

    const PromptLibrary prompts =
        config.template_dir.empty()
            ? PromptLibrary::builtin(config.template_version)
            : PromptLibrary::from_directory(config.template_dir, config.template_version);

    if (!backends.reader) throw ConfigError("run needs a reader backend");
    if (!backends.writer) throw ConfigError("run needs a writer backend");
    if (config.selector.uses_backend() && !backends.selector) {
        throw ConfigError(selector_strategy_name(config.selector.strategy) +
                          std::string(" needs a selector backend"));
    }

    RelationGraph graph;
    const bool graph_kind = config.selector.is_graph();
    if (graph_kind) {
        graph = config.selector.strategy == SelectorStrategy::GraphCo
                    ? build_cooccurrence_graph(instance)
                    : build_citation_graph(instance);
    }

    RunTrace trace;
    RunLogger log(trace, sink);

    {
        json papers = json::array();
        for (PaperId id = 0; id <= instance.n_refs(); ++id) {
            const Paper& p = instance.paper(id);
            json sections = json::array();
            for (const auto& s : p.sections) sections.push_back(s.name);
            papers.push_back({{"id", id}, {"title", p.title}, {"sections", std::move(sections)}});
        }
        log.emit({{"schema", "rwg-log/1"},
                  {"type", "meta"},
                  {"selector", selector_strategy_name(config.selector.strategy)},
                  {"seed", config.selector.seed},
                  {"budget", config.budget.limit},
                  {"template_version", prompts.version()},
                  {"n_refs", instance.n_refs()},
                  {"total_sections", total},
                  {"papers", std::move(papers)}});
    }

    SelectorState state = make_selector_state(config.selector, instance);
    if (graph_kind) {
        state.cursor = initial_paper(config.selector, instance, &graph, backends.selector.get(),
                                     prompts, config.selector_generation);
        log.emit({{"type", "initial"}, {"paper", *state.cursor}});
    }

    WorkingMemory memory;
    memory.refresh(default_estimator());
    ReadingHistory history;

    SelectorContext ctx{instance,
                        memory,
                        history,
                        graph_kind ? &graph : nullptr,
                        backends.selector.get(),
                        &prompts,
                        config.selector_generation};

    bool ended = false;
    for (int step = 1; step <= max_steps; ++step) {
        const std::optional<PaperId> cursor_before = state.cursor;
        SelectorDecision decision = next_decision(state, ctx);
        log.emit({{"type", "decision"}, {"step", step}, {"decision", decision_to_json(decision)}});
        trace.decisions.push_back(decision);
        if (!decision.is_read()) {
            ended = true;
            break;
        }

        if (config.strict_checks) {
            if (history.contains({decision.paper, decision.section})) {
                throw InvariantViolationError("selector repeated a history entry");
            }
            if (graph_kind && cursor_before.has_value()) {
                const auto nb = one_hop(graph, *cursor_before);
                if (!nb.members.count(decision.paper)) {
                    throw InvariantViolationError("selector left the one-hop neighborhood");
                }
            }
        }

        history.record({decision.paper, decision.section});

        ReaderRequest req;
        req.paper = decision.paper;
        req.section = decision.section;
        const Section* section = instance.paper(decision.paper).find_section(decision.section);
        req.section_text = section ? section->text : std::string();
        req.memory_before = memory;
        req.budget = config.budget;
        req.n_refs = instance.n_refs();
        req.generation = config.reader_generation;
        memory = read_section(req, *backends.reader, prompts);
        memory.refresh(default_estimator());

        if (config.strict_checks && !enforce_budget(memory, config.budget)) {
            throw InvariantViolationError("memory exceeds the token budget after a reader step");
        }

        trace.memory_snapshots.push_back(memory);
        log.emit({{"type", "memory_snapshot"},
                  {"step", step},
                  {"tokens", memory.token_estimate},
                  {"memory", memory_to_json(memory)}});
        ++trace.step_count;
    }
    if (!ended) {
        // Step cap reached: record the forced End so the decision list always
        // terminates.
        trace.decisions.push_back(SelectorDecision::end());
        log.emit({{"type", "decision"},
                  {"step", trace.step_count + 1},
                  {"decision", decision_to_json(SelectorDecision::end())}});
    }

    WriterRequest wreq;
    wreq.memory_final = memory;
    wreq.history_final = history.entries();
    wreq.exemplar = config.exemplar_override.empty() ? prompts.get("exemplar_rws")
                                                     : config.exemplar_override;
    wreq.instructions = default_writer_instructions();
    if (config.writer_include_citing_abstract) {
        wreq.citing_abstract = instance.citing.abstract_text();
    }
    wreq.n_refs = instance.n_refs();
    wreq.generation = config.writer_generation;
    trace.final_rws = write_rws(wreq, *backends.writer, prompts);

    json cited = json::array();
    for (PaperId id : trace.final_rws.cited_ids) cited.push_back(id);
    log.emit({{"type", "rws"}, {"text", trace.final_rws.text}, {"cited_ids", std::move(cited)}});

    trace.selector_usage = backends.selector ? backends.selector->usage_report() : BackendUsage{};
    trace.reader_usage = backends.reader->usage_report();
    trace.writer_usage = backends.writer->usage_report();
    const auto usage_json = [](const BackendUsage& u) {
        return json{{"requests", u.requests},
                    {"prompt_tokens", u.prompt_tokens},
                    {"reply_tokens", u.reply_tokens}};
    };
    log.emit({{"type", "usage"},
              {"selector", usage_json(trace.selector_usage)},
              {"reader", usage_json(trace.reader_usage)},
              {"writer", usage_json(trace.writer_usage)}});

    trace.history = history;
    return trace;
}

RunTrace run(const TaskInstance& instance, const RunConfig& config, const LogSink& sink) {
    AgentBackends backends;
    if (!config.reader_backend_spec.empty()) {
        backends.reader = make_backend(config.reader_backend_spec, config.base_dir);
    }
    if (!config.writer_backend_spec.empty()) {
        backends.writer = make_backend(config.writer_backend_spec, config.base_dir);
    }
    if (config.selector.uses_backend() && !config.selector_backend_spec.empty()) {
        backends.selector = make_backend(config.selector_backend_spec, config.base_dir);
    }
    return run(instance, config, backends, sink);
}

std::string category_of(const SectionName& name) {
    struct Category {
        const char* label;
        std::vector<const char*> keywords;
    };
    static const std::vector<Category> table = {
        {"Introduction", {"introduction"}},
        {"Related Work", {"related", "prior", "background"}},
        {"Methodology", {"method", "approach", "model", "framework"}},
        {"Experiments", {"experiment", "evaluation", "result", "analysis"}},
        {"Conclusion", {"conclusion", "discussion", "future"}},
    };
    const std::string lower = detail::to_lower(name);
    for (const auto& cat : table) {
        for (const char* kw : cat.keywords) {
            if (lower.find(kw) != std::string::npos) return cat.label;
        }
    }
    return "Other";
}

namespace {

struct SectionCatalog {
    // per paper id: ordered section names
    std::vector<std::vector<SectionName>> papers;
    int total = 0;
};

bool is_abstract_name(const SectionName& name) {
    return detail::to_lower(detail::trim(name)) == "abstract";
}

ReadingStats stats_from(const SectionCatalog& catalog,
                        const std::vector<std::pair<PaperId, SectionName>>& reads) {
    ReadingStats stats;
    stats.total_sections = catalog.total;
    stats.reads = static_cast<int>(reads.size());
    stats.proportion_read =
        catalog.total > 0 ? static_cast<double>(stats.reads) / catalog.total : 0.0;

    // Abstracts are excluded from the category accounting: they are provided
    // up front, not selected for reading.
    std::map<std::string, int> have, read;
    for (const auto& sections : catalog.papers) {
        for (const auto& name : sections) {
            if (!is_abstract_name(name)) ++have[category_of(name)];
        }
    }
    std::set<std::pair<PaperId, SectionName>> read_set(reads.begin(), reads.end());
    for (size_t id = 0; id < catalog.papers.size(); ++id) {
        for (const auto& name : catalog.papers[id]) {
            if (is_abstract_name(name)) continue;
            if (read_set.count({static_cast<PaperId>(id), name})) ++read[category_of(name)];
        }
    }
    for (const auto& [cat, n] : have) {
        stats.per_category[cat] = static_cast<double>(read[cat]) / n;
    }
    return stats;
}

}  // namespace

ReadingStats reading_stats(const RunTrace& trace, const TaskInstance& instance) {
    SectionCatalog catalog;
    for (PaperId id = 0; id <= instance.n_refs(); ++id) {
        std::vector<SectionName> names;
        for (const auto& s : instance.paper(id).sections) names.push_back(s.name);
        catalog.papers.push_back(std::move(names));
    }
    catalog.total = instance.total_sections();
    return stats_from(catalog, trace.history.entries());
}

ReadingStats reading_stats_from_log(const std::string& log_jsonl) {
    SectionCatalog catalog;
    std::vector<std::pair<PaperId, SectionName>> reads;
    bool have_meta = false;

    std::istringstream in(log_jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad run log line: ") + e.what());
        }
        const std::string type = rec.value("type", std::string());
        if (type == "meta") {
            have_meta = true;
            catalog.total = rec.value("total_sections", 0);
            for (const auto& p : rec.value("papers", json::array())) {
                std::vector<SectionName> names;
                for (const auto& s : p.value("sections", json::array())) {
                    names.push_back(s.get<std::string>());
                }
                catalog.papers.push_back(std::move(names));
            }
        } else if (type == "decision") {
            const json& d = rec.value("decision", json::object());
            if (d.value("kind", std::string()) == "read") {
                reads.emplace_back(d.value("paper", 0), d.value("section", std::string()));
            }
        }
    }
    if (!have_meta) throw ParseError("run log has no meta record");
    return stats_from(catalog, reads);
}

namespace {

struct ReportView {
    std::string name;
    std::set<std::string> doc_ids;
    double edges = 0, degree = 0, clustering = 0;
    std::optional<JudgeMeans> judges;
};

ReportView parse_report(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("corpus report is not valid JSON: ") + e.what());
    }
    ReportView v;
    v.name = j.value("config_name", std::string("unnamed"));
    for (const auto& id : j.value("doc_ids", json::array())) {
        v.doc_ids.insert(id.get<std::string>());
    }
    const json means = j.value("means", json::object());
    v.edges = means.value("edges", 0.0);
    v.degree = means.value("degree", 0.0);
    v.clustering = means.value("clustering", 0.0);
    if (j.contains("judge_means") && j["judge_means"].is_object()) {
        JudgeMeans jm;
        jm.coverage = j["judge_means"].value("coverage", 0.0);
        jm.logic = j["judge_means"].value("logic", 0.0);
        jm.relevance = j["judge_means"].value("relevance", 0.0);
        jm.overall = j["judge_means"].value("overall", 0.0);
        v.judges = jm;
    }
    return v;
}

std::vector<ReportView> comparable_reports(const std::vector<std::string>& report_jsons) {
    if (report_jsons.size() < 2) {
        throw MismatchedCorporaError("compare needs >= 2 reports");
    }
    std::vector<ReportView> views;
    for (const auto& text : report_jsons) views.push_back(parse_report(text));
    for (size_t i = 1; i < views.size(); ++i) {
        if (views[i].doc_ids != views[0].doc_ids) {
            throw MismatchedCorporaError("reports cover different document sets (\"" +
                                         views[0].name + "\" vs \"" + views[i].name + "\")");
        }
    }
    std::sort(views.begin(), views.end(),
              [](const ReportView& a, const ReportView& b) { return a.name < b.name; });
    return views;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string compare_reports_text(const std::vector<std::string>& report_jsons) {
    const auto views = comparable_reports(report_jsons);
    size_t width = std::string("config").size();
    for (const auto& v : views) width = std::max(width, v.name.size());

    std::ostringstream out;
    out << std::string("config") << std::string(width - 6, ' ')
        << "  edges     degree    clustering  coverage  logic     relevance  overall\n";
    for (const auto& v : views) {
        out << v.name << std::string(width - v.name.size(), ' ');
        out << "  " << fmt6(v.edges) << "  " << fmt6(v.degree) << "  " << fmt6(v.clustering);
        if (v.judges.has_value()) {
            out << "    " << fmt6(v.judges->coverage) << "  " << fmt6(v.judges->logic) << "  "
                << fmt6(v.judges->relevance) << "   " << fmt6(v.judges->overall);
        } else {
            out << "    -         -         -          -";
        }
        out << '\n';
    }
    return out.str();
}

std::string compare_reports_csv(const std::vector<std::string>& report_jsons) {
    const auto views = comparable_reports(report_jsons);
    std::ostringstream out;
    out << "config,edges,degree,clustering,coverage,logic,relevance,overall\n";
    for (const auto& v : views) {
        out << v.name << ',' << fmt6(v.edges) << ',' << fmt6(v.degree) << ','
            << fmt6(v.clustering) << ',';
        if (v.judges.has_value()) {
            out << fmt6(v.judges->coverage) << ',' << fmt6(v.judges->logic) << ','
                << fmt6(v.judges->relevance) << ',' << fmt6(v.judges->overall);
        } else {
            out << ",,,";
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace rwg
