#include <cstdlib>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "rwg/errors.hpp"
#include "rwg/pipeline.hpp"

using namespace rwg;
using nlohmann::json;

namespace {

TaskInstance small() { return load_instance(rwgtest::fixture_path("instance_small.json")); }

RunConfig fixture_config(const std::string& name) {
    return parse_run_config(rwgtest::read_file(rwgtest::fixture_path(name)), RWG_FIXTURE_DIR);
}

std::string joined_log(const RunTrace& trace) {
    std::string out;
    for (const auto& line : trace.log_lines) out += line + "\n";
    return out;
}

}  // namespace

TEST_CASE("SR over a 2-paper, 4-section instance: T = 4 and the enumeration order") {
    TaskInstance inst;
    Paper citing;
    citing.id = 0;
    citing.title = "C";
    citing.sections = {{"Abstract", 1, "a"}, {"Method", 2, "m"}};
    Paper ref;
    ref.id = 1;
    ref.title = "R";
    ref.sections = {{"Abstract", 1, "a"}, {"Results", 2, "r"}};
    inst.citing = citing;
    inst.references = {ref};

    RunConfig config;
    config.selector.strategy = SelectorStrategy::SR;
    AgentBackends backends;
    backends.reader = std::make_shared<rwgtest::CallbackBackend>([](const ChatRequest&) {
        return R"({"per_paper_notes": {"1": "n"}, "relationship_notes": [], "scratch": ""})";
    });
    backends.writer = std::make_shared<rwgtest::CallbackBackend>(
        [](const ChatRequest&) { return std::string("Only [1] is discussed."); });

    const RunTrace trace = run(inst, config, backends);
    CHECK(trace.step_count == 4);
    REQUIRE(trace.decisions.size() == 5);
    CHECK(trace.decisions[0] == SelectorDecision::read(0, "Abstract"));
    CHECK(trace.decisions[1] == SelectorDecision::read(0, "Method"));
    CHECK(trace.decisions[2] == SelectorDecision::read(1, "Abstract"));
    CHECK(trace.decisions[3] == SelectorDecision::read(1, "Results"));
    CHECK_FALSE(trace.decisions[4].is_read());
    CHECK(trace.final_rws.cited_ids == std::set<PaperId>{1});
}

TEST_CASE("scripted SR run reads everything in order") {
    const TaskInstance inst = small();
    const RunConfig config = fixture_config("config_sr_mock.json");
    const RunTrace trace = run(inst, config);

    CHECK(trace.step_count == 10);
    REQUIRE(trace.decisions.size() == 11);  // 10 reads + forced End at exhaustion
    CHECK_FALSE(trace.decisions.back().is_read());
    CHECK(trace.memory_snapshots.size() == 10);

    // First decision is (0, first section); order follows ids then indices.
    CHECK(trace.decisions.front() == SelectorDecision::read(0, "Abstract"));
    CHECK(trace.decisions[3] == SelectorDecision::read(1, "Abstract"));

    // The generic mock reader retains every reference by the end.
    CHECK(retention_ratio(trace.memory_snapshots.back(), inst) == doctest::Approx(1.0));

    const ReadingStats stats = reading_stats(trace, inst);
    CHECK(stats.proportion_read == doctest::Approx(1.0));
    for (const auto& [cat, frac] : stats.per_category) {
        INFO(cat);
        CHECK(frac == doctest::Approx(1.0));
    }
}

TEST_CASE("scripted Graph-Ci run: early stop, repaired pick, exact stats") {
    const TaskInstance inst = small();
    const RunConfig config = fixture_config("config_graphci_mock.json");
    const RunTrace trace = run(inst, config);

    CHECK(trace.step_count == 4);
    REQUIRE(trace.decisions.size() == 5);
    CHECK(trace.decisions[0] == SelectorDecision::read(1, "Abstract"));
    CHECK(trace.decisions[1] == SelectorDecision::read(2, "Approach"));
    CHECK(trace.decisions[2] == SelectorDecision::read(2, "Results"));  // repaired from (3, ...)
    CHECK(trace.decisions[3] == SelectorDecision::read(0, "Introduction"));
    CHECK_FALSE(trace.decisions[4].is_read());

    CHECK(trace.final_rws.cited_ids == std::set<PaperId>{1, 2, 3});
    CHECK(retention_ratio(trace.memory_snapshots.back(), inst) == doctest::Approx(1.0));

    const ReadingStats stats = reading_stats(trace, inst);
    CHECK(stats.reads == 4);
    CHECK(stats.total_sections == 10);
    CHECK(stats.proportion_read == doctest::Approx(0.4));
    CHECK(stats.per_category.at("Introduction") == doctest::Approx(1.0));
    CHECK(stats.per_category.at("Methodology") == doctest::Approx(1.0 / 3.0));
    CHECK(stats.per_category.at("Experiments") == doctest::Approx(0.5));

    // Stats recomputed from the log alone agree.
    const ReadingStats from_log = reading_stats_from_log(joined_log(trace));
    CHECK(from_log.reads == stats.reads);
    CHECK(from_log.proportion_read == doctest::Approx(stats.proportion_read));
    CHECK(from_log.per_category == stats.per_category);
}

TEST_CASE("identical scripted runs produce byte-identical logs") {
    const TaskInstance inst = small();
    const RunConfig config = fixture_config("config_graphci_mock.json");
    const RunTrace a = run(inst, config);
    const RunTrace b = run(inst, config);
    CHECK(joined_log(a) == joined_log(b));
    CHECK(a.final_rws.text == b.final_rws.text);
}

TEST_CASE("SR and RR(7) produce different decision orders") {
    const TaskInstance inst = small();
    const RunTrace sr = run(inst, fixture_config("config_sr_mock.json"));
    const RunTrace rr = run(inst, fixture_config("config_rr_mock.json"));
    CHECK(sr.decisions != rr.decisions);
    CHECK(sr.decisions.size() == rr.decisions.size());
}

TEST_CASE("memory and history invariants hold along scripted runs") {
    const TaskInstance inst = small();
    for (const char* name : {"config_sr_mock.json", "config_graphci_mock.json"}) {
        const RunTrace trace = run(inst, fixture_config(name));
        const TokenBudget budget(4096);
        for (const auto& snapshot : trace.memory_snapshots) {
            CHECK(enforce_budget(snapshot, budget));
        }
        std::set<ReadingHistory::Entry> seen;
        for (const auto& e : trace.history.entries()) CHECK(seen.insert(e).second);
    }
}

TEST_CASE("run log records carry the expected shapes") {
    const TaskInstance inst = small();
    const RunTrace trace = run(inst, fixture_config("config_graphci_mock.json"));
    REQUIRE(!trace.log_lines.empty());

    const json meta = json::parse(trace.log_lines.front());
    CHECK(meta["type"] == "meta");
    CHECK(meta["schema"] == "rwg-log/1");
    CHECK(meta["selector"] == "Graph-Ci");
    CHECK(meta["papers"].size() == 4);

    int decisions = 0, snapshots = 0, rws = 0, usage = 0, initial = 0;
    for (const auto& line : trace.log_lines) {
        const json rec = json::parse(line);
        const std::string type = rec["type"];
        if (type == "decision") ++decisions;
        if (type == "memory_snapshot") ++snapshots;
        if (type == "rws") ++rws;
        if (type == "usage") ++usage;
        if (type == "initial") ++initial;
    }
    CHECK(decisions == 5);
    CHECK(snapshots == 4);
    CHECK(rws == 1);
    CHECK(usage == 1);
    CHECK(initial == 1);

    // Usage counters are deterministic under mocks.
    CHECK(trace.selector_usage.requests == 7);  // initial + 5 steps + 1 repair
    CHECK(trace.reader_usage.requests == 4);
    CHECK(trace.writer_usage.requests == 1);
}

TEST_CASE("a failing backend aborts the run but leaves the partial log") {
    const TaskInstance inst = small();
    RunConfig config = fixture_config("config_sr_mock.json");

    AgentBackends backends;
    backends.reader = std::make_shared<MockBackend>(std::vector<MockStep>{});  // exhausted at once
    backends.writer = std::make_shared<MockBackend>(std::vector<MockStep>{});

    std::vector<std::string> streamed;
    CHECK_THROWS_AS(run(inst, config, backends,
                        [&](const std::string& line) { streamed.push_back(line); }),
                    BackendError);
    REQUIRE(!streamed.empty());
    CHECK(json::parse(streamed.front())["type"] == "meta");
    // The first decision was logged before the reader failed.
    bool saw_decision = false;
    for (const auto& line : streamed) {
        if (json::parse(line)["type"] == "decision") saw_decision = true;
    }
    CHECK(saw_decision);
}

TEST_CASE("strict checks can be toggled off") {
    const TaskInstance inst = small();
    RunConfig config = fixture_config("config_graphci_mock.json");
    config.strict_checks = false;
    const RunTrace trace = run(inst, config);
    CHECK(trace.step_count == 4);
}

TEST_CASE("max_steps caps a run with a forced End") {
    const TaskInstance inst = small();
    RunConfig config = fixture_config("config_sr_mock.json");
    config.max_steps = 3;
    const RunTrace trace = run(inst, config);
    CHECK(trace.step_count == 3);
    REQUIRE(trace.decisions.size() == 4);
    CHECK_FALSE(trace.decisions.back().is_read());
}

TEST_CASE("stats on a trace that read only the related-work sections") {
    // Two papers, each [Related Work, Method]; the trace covers both RW
    // sections and neither Method: 2 of 4 sections, RW 1.0, Methodology 0.0.
    TaskInstance inst;
    Paper citing;
    citing.id = 0;
    citing.sections = {{"Prior Work", 1, "x"}, {"Method", 2, "x"}};
    Paper ref;
    ref.id = 1;
    ref.sections = {{"Related Work", 1, "x"}, {"Method", 2, "x"}};
    inst.citing = citing;
    inst.references = {ref};

    RunTrace trace;
    trace.history.record({0, "Prior Work"});
    trace.history.record({1, "Related Work"});

    const ReadingStats stats = reading_stats(trace, inst);
    CHECK(stats.proportion_read == doctest::Approx(0.5));
    CHECK(stats.per_category.at("Related Work") == doctest::Approx(1.0));
    CHECK(stats.per_category.at("Methodology") == doctest::Approx(0.0));
    CHECK(stats.per_category.size() == 2);
}

TEST_CASE("category keyword table") {
    CHECK(category_of("Introduction") == "Introduction");
    CHECK(category_of("Background and Motivation") == "Related Work");
    CHECK(category_of("Prior Art") == "Related Work");
    CHECK(category_of("Our Approach") == "Methodology");
    CHECK(category_of("Experimental Results") == "Experiments");
    CHECK(category_of("Conclusion and Future Work") == "Conclusion");
    CHECK(category_of("Acknowledgements") == "Other");
}

TEST_CASE("config parsing: defaults, env interpolation, errors") {
    const RunConfig defaults = parse_run_config(R"({"selector": "SR"})", ".");
    CHECK(defaults.budget.limit == 4096);
    CHECK(defaults.template_version == "v1");
    CHECK(defaults.max_steps == 0);
    CHECK(defaults.strict_checks);
    CHECK(defaults.writer_generation.temperature == doctest::Approx(0.7));
    CHECK(defaults.selector_generation.temperature == doctest::Approx(0.0));

    setenv("RWG_TEST_MODEL", "m-17", 1);
    const RunConfig interp = parse_run_config(
        R"({"selector": "SR", "backend": {"type": "http", "endpoint_url": "http://x", "model": "${RWG_TEST_MODEL}"}})",
        ".");
    CHECK(interp.reader_backend_spec.find("m-17") != std::string::npos);
    unsetenv("RWG_TEST_MODEL");
    CHECK_THROWS_AS(
        parse_run_config(R"({"selector": "SR", "backend": {"model": "${RWG_TEST_MODEL}"}})", "."),
        ConfigError);

    CHECK_THROWS_AS(parse_run_config("[]", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"selector": "bogus"})", "."), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"selector": "SR", "budget_tokens": 10})", "."),
                    ConfigError);
}

TEST_CASE("compare lines up reports and rejects mismatched corpora") {
    DocumentEval d1{"a", {2, 4.0 / 3.0, 0.0}, {}};
    DocumentEval d2{"b", {4, 2.0, 0.5}, {}};
    const std::string r1 = report_json(aggregate({d1, d2}), "cfg-b");
    const std::string r2 = report_json(aggregate({d1, d2}), "cfg-a");

    const std::string table = compare_reports_text({r1, r2});
    CHECK(table.find("cfg-a") != std::string::npos);
    CHECK(table.find("cfg-b") != std::string::npos);
    CHECK(table.find("cfg-a") < table.find("cfg-b"));  // rows ordered by name

    const std::string csv = compare_reports_csv({r1, r2});
    CHECK(csv.find("config,edges,degree,clustering") == 0);
    CHECK(csv.find("cfg-a,3.000000") != std::string::npos);

    CHECK_THROWS_AS(compare_reports_text({r1}), MismatchedCorporaError);
    DocumentEval other{"zzz", {1, 1.0, 0.0}, {}};
    const std::string r3 = report_json(aggregate({other}), "cfg-c");
    CHECK_THROWS_AS(compare_reports_text({r1, r3}), MismatchedCorporaError);
}

TEST_CASE("means recomputed from per-document values match report means") {
    std::mt19937 rng(4);
    std::vector<DocumentEval> docs;
    for (int i = 0; i < 7; ++i) {
        const EvalGraph g = rwgtest::random_eval_graph(rng, 8);
        docs.push_back({"doc" + std::to_string(i), compute_metrics(g), {}});
    }
    const CorpusReport report = aggregate(docs);
    double edges = 0;
    for (const auto& d : report.per_document) edges += d.metrics.edge_count;
    CHECK(report.means.edge_count == doctest::Approx(edges / 7.0).epsilon(1e-9));
}
