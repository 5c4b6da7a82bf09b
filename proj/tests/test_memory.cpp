#include "doctest.h"
#include "helpers.hpp"
#include "rwg/errors.hpp"
#include "rwg/memory.hpp"

using namespace rwg;

TEST_CASE("token estimate is ceil(bytes/4)") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("12345678") == 2);
    CHECK(estimate_tokens("123456789") == 3);
    CHECK(estimate_tokens("abc") == 1);
}

TEST_CASE("token estimate is monotone under prefix extension") {
    std::mt19937 rng(5);
    std::string s;
    int last = 0;
    for (int i = 0; i < 200; ++i) {
        s.push_back(static_cast<char>('a' + rng() % 26));
        const int now = estimate_tokens(s);
        CHECK(now >= last);
        last = now;
    }
}

TEST_CASE("budget floor is 256") {
    CHECK_THROWS_AS(TokenBudget(255), ConfigError);
    CHECK(TokenBudget(256).limit == 256);
    CHECK(TokenBudget().limit == 4096);
}

TEST_CASE("history record and contains") {
    ReadingHistory h;
    CHECK_FALSE(h.contains({0, "Abstract"}));

    h.record({0, "Abstract"});
    CHECK(h.entries() == std::vector<ReadingHistory::Entry>{{0, "Abstract"}});
    CHECK(h.contains({0, "Abstract"}));

    CHECK_THROWS_AS(h.record({0, "Abstract"}), DuplicateReadError);

    h.record({2, "Method"});
    REQUIRE(h.size() == 2);
    CHECK(h.entries()[0] == ReadingHistory::Entry{0, "Abstract"});
    CHECK(h.entries()[1] == ReadingHistory::Entry{2, "Method"});
    CHECK(h.contains({2, "Method"}));
}

TEST_CASE("enforce_budget is an inclusive check, no truncation") {
    const TokenBudget budget(4096);

    WorkingMemory empty;
    empty.refresh(default_estimator());
    CHECK(enforce_budget(empty, budget));

    WorkingMemory big;
    big.scratch = std::string(20000, 'x');
    big.refresh(default_estimator());
    CHECK(big.token_estimate > 4096);  // ceil(20000/4) = 5000 plus envelope
    CHECK_FALSE(enforce_budget(big, budget));
    CHECK(big.scratch.size() == 20000);  // untouched

    // Exactly at the limit is within budget.
    WorkingMemory at;
    at.refresh(default_estimator());
    const int envelope = at.token_estimate;
    at.scratch = std::string(static_cast<size_t>(4096 - envelope) * 4, 'y');
    at.refresh(default_estimator());
    CHECK(at.token_estimate == 4096);
    CHECK(enforce_budget(at, budget));
}

TEST_CASE("serialization is canonical and drives the estimate") {
    WorkingMemory mem;
    mem.per_paper_notes[2] = "b";
    mem.per_paper_notes[1] = "a";
    mem.relationship_notes = {"r"};
    mem.scratch = "s";
    const std::string s = serialize_memory(mem);
    CHECK(s ==
          R"({"per_paper_notes":{"1":"a","2":"b"},"relationship_notes":["r"],"scratch":"s"})");
    mem.refresh(default_estimator());
    CHECK(mem.token_estimate == estimate_tokens(s));
}

TEST_CASE("parse_memory handles fences, prose and bad keys") {
    const auto mem = parse_memory(
        "Here you go:\n```json\n{\"per_paper_notes\": {\"1\": \"x\", \"9\": \"dropped\"},"
        "\"relationship_notes\": [\"r\"], \"scratch\": \"s\"}\n```",
        3);
    CHECK(mem.per_paper_notes == std::map<PaperId, std::string>{{1, "x"}});
    CHECK(mem.relationship_notes == std::vector<std::string>{"r"});
    CHECK(mem.scratch == "s");

    CHECK_THROWS_AS(parse_memory("no json here", 3), ParseError);
    CHECK_THROWS_AS(parse_memory("{\"per_paper_notes\": {\"one\": \"x\"}}", 3), ParseError);
    CHECK_THROWS_AS(parse_memory("{\"per_paper_notes\": 4}", 3), ParseError);
    CHECK_THROWS_AS(parse_memory("{\"relationship_notes\": [1]}", 3), ParseError);

    // Missing fields default to empty.
    const auto sparse = parse_memory("{}", 3);
    CHECK(sparse.per_paper_notes.empty());
    CHECK(sparse.scratch.empty());
}

TEST_CASE("retention ratio counts non-empty reference notes") {
    const TaskInstance inst = rwg::load_instance(rwgtest::fixture_path("instance_small.json"));

    WorkingMemory all;
    all.per_paper_notes = {{0, "c"}, {1, "a"}, {2, "b"}, {3, "c"}};
    CHECK(retention_ratio(all, inst) == doctest::Approx(1.0));

    WorkingMemory none;
    CHECK(retention_ratio(none, inst) == doctest::Approx(0.0));

    WorkingMemory partial;
    partial.per_paper_notes = {{1, "a"}, {2, ""}, {3, "c"}};  // empty note does not count
    CHECK(retention_ratio(partial, inst) == doctest::Approx(2.0 / 3.0));
}
