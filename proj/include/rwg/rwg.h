/* C API of the rwg shared library.
 *
 * All functions returning rwg_status set a thread-local error message
 * readable via rwg_last_error() on failure. Strings returned through char**
 * out-parameters are heap-allocated and must be released with
 * rwg_string_free(). Handles are opaque and must be released with their
 * _free function. Handles are immutable after creation and safe to share
 * across threads.
 */
#ifndef RWG_H
#define RWG_H

#ifdef __cplusplus
extern "C" {
#endif

#ifndef RWG_API
#define RWG_API __attribute__((visibility("default")))
#endif

typedef enum rwg_status {
    RWG_OK = 0,
    RWG_ERR_PARSE = 1,      /* malformed input file or JSON */
    RWG_ERR_VALIDATION = 2, /* corpus invariant violated */
    RWG_ERR_IO = 3,
    RWG_ERR_CONFIG = 4,
    RWG_ERR_BACKEND = 5,    /* LLM backend failure (after retries) */
    RWG_ERR_INVALID_ARG = 6,
    RWG_ERR_INTERNAL = 7
} rwg_status;

typedef struct rwg_instance rwg_instance;

RWG_API const char* rwg_version(void);

/* Message for the last failing call on this thread; empty string if none. */
RWG_API const char* rwg_last_error(void);

RWG_API void rwg_string_free(char* s);

/* ---- corpus ---- */

RWG_API rwg_status rwg_instance_load(const char* path, rwg_instance** out);
RWG_API rwg_status rwg_instance_from_json(const char* json_text, rwg_instance** out);
RWG_API void rwg_instance_free(rwg_instance* instance);

RWG_API int rwg_instance_ref_count(const rwg_instance* instance);     /* N; -1 on null */
RWG_API int rwg_instance_section_total(const rwg_instance* instance); /* sum L_i; -1 on null */

/* {"n_refs":..,"total_sections":..,"papers":[{"id","title","sections":[...]}]} */
RWG_API rwg_status rwg_instance_summary_json(const rwg_instance* instance, char** out);

/* Canonical corpus JSON; reloading it yields an equal instance. */
RWG_API rwg_status rwg_instance_canonical_json(const rwg_instance* instance, char** out);

/* ---- graphs ---- */

/* kind: "citation" or "cooccurrence". Edge list, "src<TAB>dst" per line. */
RWG_API rwg_status rwg_graph_edges_tsv(const rwg_instance* instance, const char* kind, char** out);

/* ---- pipeline ---- */

/* Runs the selector/reader/writer loop under config_json (see README).
 * base_dir resolves relative script paths; pass NULL for the current
 * directory. On success *log_jsonl_out holds the full run log and
 * *rws_text_out the generated related-work text. On backend failure the
 * partial log (if any) is still returned. */
RWG_API rwg_status rwg_run(const rwg_instance* instance, const char* config_json,
                           const char* base_dir, char** log_jsonl_out, char** rws_text_out);

/* ---- evaluation ---- */

/* Graph metrics for one generated rws, plus judge scores when judges_json
 * ({"judges":[{"name":...,"backend":{...}}]}) is non-NULL. Result:
 * {"metrics":{"edges","degree","clustering"},"judges":[...]}. */
RWG_API rwg_status rwg_evaluate(const rwg_instance* instance, const char* rws_text,
                                const char* judges_json, const char* base_dir, char** out);

/* docs_json: array of {"doc_id":...,"eval":<rwg_evaluate result>}. Produces
 * the corpus summary JSON and the per-document CSV. */
RWG_API rwg_status rwg_report_aggregate(const char* docs_json, const char* config_name,
                                        char** report_json_out, char** csv_out);

/* Reading statistics from a run log produced by rwg_run. */
RWG_API rwg_status rwg_reading_stats(const char* log_jsonl, char** stats_json_out);

/* Side-by-side comparison of >= 2 corpus report JSON documents. */
RWG_API rwg_status rwg_compare(const char* const* report_jsons, int count, char** text_out,
                               char** csv_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RWG_H */
