#include "rwg/rwg.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "json.hpp"
#include "rwg/agents.hpp"
#include "rwg/corpus.hpp"
#include "rwg/errors.hpp"
#include "rwg/graph.hpp"
#include "rwg/metrics.hpp"
#include "rwg/pipeline.hpp"

using nlohmann::json;

struct rwg_instance {
    rwg::TaskInstance value;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

rwg_status status_of(const std::exception& e) {
    if (dynamic_cast<const rwg::ParseError*>(&e)) return RWG_ERR_PARSE;
    if (dynamic_cast<const rwg::ValidationError*>(&e)) return RWG_ERR_VALIDATION;
    if (dynamic_cast<const rwg::IoError*>(&e)) return RWG_ERR_IO;
    if (dynamic_cast<const rwg::ConfigError*>(&e)) return RWG_ERR_CONFIG;
    if (dynamic_cast<const rwg::BackendError*>(&e)) return RWG_ERR_BACKEND;
    return RWG_ERR_INTERNAL;
}

template <typename Fn>
rwg_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RWG_OK;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (...) {
        g_last_error = "unknown error";
        return RWG_ERR_INTERNAL;
    }
}

rwg_status invalid_arg(const char* message) {
    g_last_error = message;
    return RWG_ERR_INVALID_ARG;
}

}  // namespace

extern "C" {

const char* rwg_version(void) { return "0.1.0"; }

const char* rwg_last_error(void) { return g_last_error.c_str(); }

void rwg_string_free(char* s) { std::free(s); }

rwg_status rwg_instance_load(const char* path, rwg_instance** out) {
    if (!path || !out) return invalid_arg("rwg_instance_load: null argument");
    return guarded([&] { *out = new rwg_instance{rwg::load_instance(path)}; });
}

rwg_status rwg_instance_from_json(const char* json_text, rwg_instance** out) {
    if (!json_text || !out) return invalid_arg("rwg_instance_from_json: null argument");
    return guarded([&] { *out = new rwg_instance{rwg::parse_instance(json_text)}; });
}

void rwg_instance_free(rwg_instance* instance) { delete instance; }

int rwg_instance_ref_count(const rwg_instance* instance) {
    return instance ? instance->value.n_refs() : -1;
}

int rwg_instance_section_total(const rwg_instance* instance) {
    return instance ? instance->value.total_sections() : -1;
}

rwg_status rwg_instance_summary_json(const rwg_instance* instance, char** out) {
    if (!instance || !out) return invalid_arg("rwg_instance_summary_json: null argument");
    return guarded([&] {
        const auto& inst = instance->value;
        json papers = json::array();
        for (rwg::PaperId id = 0; id <= inst.n_refs(); ++id) {
            const auto& p = inst.paper(id);
            json sections = json::array();
            for (const auto& s : p.sections) sections.push_back(s.name);
            papers.push_back({{"id", id}, {"title", p.title}, {"sections", std::move(sections)}});
        }
        json j = {{"n_refs", inst.n_refs()},
                  {"total_sections", inst.total_sections()},
                  {"papers", std::move(papers)}};
        *out = dup_string(j.dump(2));
    });
}

rwg_status rwg_instance_canonical_json(const rwg_instance* instance, char** out) {
    if (!instance || !out) return invalid_arg("rwg_instance_canonical_json: null argument");
    return guarded([&] { *out = dup_string(rwg::serialize_instance(instance->value)); });
}

rwg_status rwg_graph_edges_tsv(const rwg_instance* instance, const char* kind, char** out) {
    if (!instance || !kind || !out) return invalid_arg("rwg_graph_edges_tsv: null argument");
    const std::string k = kind;
    if (k != "citation" && k != "cooccurrence") {
        return invalid_arg("rwg_graph_edges_tsv: kind must be citation or cooccurrence");
    }
    return guarded([&] {
        const auto graph = k == "citation" ? rwg::build_citation_graph(instance->value)
                                           : rwg::build_cooccurrence_graph(instance->value);
        *out = dup_string(rwg::edges_tsv(graph));
    });
}

rwg_status rwg_run(const rwg_instance* instance, const char* config_json, const char* base_dir,
                   char** log_jsonl_out, char** rws_text_out) {
    if (!instance || !config_json || !log_jsonl_out || !rws_text_out) {
        return invalid_arg("rwg_run: null argument");
    }
    std::string log_text;
    const rwg_status status = guarded([&] {
        const rwg::RunConfig config =
            rwg::parse_run_config(config_json, base_dir ? base_dir : ".");
        rwg::RunTrace trace;
        try {
            trace = rwg::run(instance->value, config,
                             [&](const std::string& line) { log_text += line + "\n"; });
        } catch (...) {
            *log_jsonl_out = dup_string(log_text);  // partial log survives the abort
            *rws_text_out = nullptr;
            throw;
        }
        *log_jsonl_out = dup_string(log_text);
        *rws_text_out = dup_string(trace.final_rws.text);
    });
    return status;
}

rwg_status rwg_evaluate(const rwg_instance* instance, const char* rws_text,
                        const char* judges_json, const char* base_dir, char** out) {
    if (!instance || !rws_text || !out) return invalid_arg("rwg_evaluate: null argument");
    return guarded([&] {
        const auto& inst = instance->value;
        const rwg::GeneratedRws rws = rwg::make_generated_rws(rws_text, inst.n_refs());
        const rwg::GraphMetrics metrics =
            rwg::compute_metrics(rwg::build_eval_graph(rws, inst.n_refs()));

        json j;
        j["metrics"] = {{"edges", metrics.edge_count},
                        {"degree", metrics.avg_node_degree},
                        {"clustering", metrics.clustering_coefficient}};
        json judges = json::array();
        if (judges_json && *judges_json) {
            json spec;
            try {
                spec = json::parse(judges_json);
            } catch (const json::exception& e) {
                throw rwg::ConfigError(std::string("judges config is not valid JSON: ") +
                                       e.what());
            }
            const auto prompts = rwg::PromptLibrary::builtin();
            for (const auto& judge_spec : spec.value("judges", json::array())) {
                const std::string name = judge_spec.value("name", std::string("judge"));
                auto backend = rwg::make_backend(judge_spec.at("backend").dump(),
                                                 base_dir ? base_dir : ".");
                const rwg::JudgeScore score =
                    rwg::judge_document(rws, inst, *backend, name, prompts);
                judges.push_back({{"judge", score.judge_name},
                                  {"coverage", score.coverage},
                                  {"logic", score.logic},
                                  {"relevance", score.relevance},
                                  {"overall", score.overall}});
            }
        }
        j["judges"] = std::move(judges);
        *out = dup_string(j.dump(2));
    });
}

rwg_status rwg_report_aggregate(const char* docs_json, const char* config_name,
                                char** report_json_out, char** csv_out) {
    if (!docs_json || !report_json_out || !csv_out) {
        return invalid_arg("rwg_report_aggregate: null argument");
    }
    return guarded([&] {
        json docs;
        try {
            docs = json::parse(docs_json);
        } catch (const json::exception& e) {
            throw rwg::ParseError(std::string("docs array is not valid JSON: ") + e.what());
        }
        if (!docs.is_array()) throw rwg::ParseError("docs must be a JSON array");

        std::vector<rwg::DocumentEval> evals;
        for (const auto& d : docs) {
            rwg::DocumentEval de;
            de.doc_id = d.value("doc_id", std::string());
            const json& eval = d.at("eval");
            const json& metrics = eval.at("metrics");
            de.metrics.edge_count = metrics.value("edges", 0);
            de.metrics.avg_node_degree = metrics.value("degree", 0.0);
            de.metrics.clustering_coefficient = metrics.value("clustering", 0.0);
            for (const auto& js : eval.value("judges", json::array())) {
                rwg::JudgeScore score;
                score.judge_name = js.value("judge", std::string());
                score.coverage = js.value("coverage", 0);
                score.logic = js.value("logic", 0);
                score.relevance = js.value("relevance", 0);
                score.overall = js.value("overall", 0.0);
                de.judges.push_back(std::move(score));
            }
            evals.push_back(std::move(de));
        }
        const rwg::CorpusReport report = rwg::aggregate(evals);
        *report_json_out =
            dup_string(rwg::report_json(report, config_name ? config_name : "unnamed"));
        *csv_out = dup_string(rwg::report_csv(report));
    });
}

rwg_status rwg_reading_stats(const char* log_jsonl, char** stats_json_out) {
    if (!log_jsonl || !stats_json_out) return invalid_arg("rwg_reading_stats: null argument");
    return guarded([&] {
        const rwg::ReadingStats stats = rwg::reading_stats_from_log(log_jsonl);
        json per_category = json::object();
        for (const auto& [cat, frac] : stats.per_category) per_category[cat] = frac;
        json j = {{"reads", stats.reads},
                  {"total_sections", stats.total_sections},
                  {"proportion_read", stats.proportion_read},
                  {"per_category", std::move(per_category)}};
        *stats_json_out = dup_string(j.dump(2));
    });
}

rwg_status rwg_compare(const char* const* report_jsons, int count, char** text_out,
                       char** csv_out) {
    if (!report_jsons || !text_out || !csv_out) return invalid_arg("rwg_compare: null argument");
    if (count < 2) return invalid_arg("rwg_compare: need >= 2 reports");
    return guarded([&] {
        std::vector<std::string> reports;
        for (int i = 0; i < count; ++i) {
            if (!report_jsons[i]) throw rwg::ParseError("null report in list");
            reports.emplace_back(report_jsons[i]);
        }
        *text_out = dup_string(rwg::compare_reports_text(reports));
        *csv_out = dup_string(rwg::compare_reports_csv(reports));
    });
}

}  // extern "C"
