#include <doctest.h>
#include <sstream>

#include "npcert/dataset_io.hpp"
#include "npcert/errors.hpp"
#include "npcert/rng.hpp"

using namespace npcert;

TEST_CASE("canonicalize: rule application") {
    CHECK(canonicalize("The Eiffel Tower ") == "eiffel tower");
    CHECK(canonicalize("PARIS.") == "paris");
    CHECK(canonicalize("  a   Nile   River ") == "nile river");
    CHECK(canonicalize("'The Answer'") == "answer");
    CHECK(canonicalize("an apple") == "apple");
    CHECK(canonicalize("o'brien") == "o'brien");  // interior punctuation survives
    CHECK(canonicalize("the") == "the");          // lone article is kept
    CHECK(canonicalize("") == "");
}

TEST_CASE("canonicalize: idempotent on random byte strings") {
    SplitMix64 rng(37);
    const char pool[] = " \tAzByC.!?'()the an a 09-_é";
    for (int rep = 0; rep < 300; ++rep) {
        std::string s;
        const std::size_t len = rng.next_u64() % 24;
        for (std::size_t i = 0; i < len; ++i) {
            s.push_back(pool[rng.next_u64() % (sizeof(pool) - 1)]);
        }
        const std::string once = canonicalize(s);
        CHECK(canonicalize(once) == once);
    }
}

TEST_CASE("label_correctness: canonical match against any reference") {
    CHECK(label_correctness("Paris", {"paris"}) == 1);
    CHECK(label_correctness("London", {"Paris"}) == 0);
    CHECK(label_correctness("the Nile", {"Nile", "Nile River"}) == 1);
    CHECK_THROWS_AS(label_correctness("x", {}), invalid_input_error);
}

TEST_CASE("label_correctness: canonicalizing either argument never changes the label") {
    SplitMix64 rng(43);
    const char* pool[] = {"The Nile", " nile.", "NILE", "amazon", "the Amazon!", "Congo"};
    for (int rep = 0; rep < 100; ++rep) {
        const std::string generated = pool[rng.next_u64() % 6];
        std::vector<std::string> refs = {pool[rng.next_u64() % 6], pool[rng.next_u64() % 6]};
        const int base = label_correctness(generated, refs);
        CHECK(label_correctness(canonicalize(generated), refs) == base);
        std::vector<std::string> canon_refs;
        for (const auto& r : refs) canon_refs.push_back(canonicalize(r));
        CHECK(label_correctness(generated, canon_refs) == base);
    }
}

namespace {
QuestionRecord make_record(const std::string& id, const std::string& generated,
                           const std::vector<std::string>& reference) {
    QuestionRecord r;
    r.id = id;
    r.question = "q";
    r.generated = generated;
    r.reference = reference;
    return r;
}
}  // namespace

TEST_CASE("split: partition covers every record and respects explicit labels") {
    std::vector<QuestionRecord> records;
    records.push_back(make_record("a", "Paris", {"Paris"}));   // derived y = 1
    records.push_back(make_record("b", "London", {"Paris"}));  // derived y = 0
    records.push_back(make_record("c", "Rome", {"Rome"}));     // derived y = 1
    records[2].label = 0;  // explicit label wins

    const auto split = split_certain_uncertain(records);
    CHECK(split.certain_ids == std::vector<std::string>{"a"});
    CHECK(split.uncertain_ids == std::vector<std::string>{"b", "c"});
    CHECK(split.certain_ids.size() + split.uncertain_ids.size() == records.size());
}

TEST_CASE("split: all-certain leaves the uncertain side empty") {
    std::vector<QuestionRecord> records;
    records.push_back(make_record("a", "x", {"x"}));
    records.push_back(make_record("b", "y", {"y"}));
    const auto split = split_certain_uncertain(records);
    CHECK(split.uncertain_ids.empty());
}

TEST_CASE("split: unlabeled record without references names the id") {
    std::vector<QuestionRecord> records;
    records.push_back(make_record("bad-one", "x", {}));
    CHECK_THROWS_WITH_AS(split_certain_uncertain(records), doctest::Contains("bad-one"),
                         invalid_input_error);
}

TEST_CASE("split: shuffling never moves a record across sides") {
    SplitMix64 rng(41);
    std::vector<QuestionRecord> records;
    for (int i = 0; i < 30; ++i) {
        const bool hit = rng.next_double() < 0.5;
        records.push_back(
            make_record("id" + std::to_string(i), hit ? "yes" : "no", {"yes"}));
    }
    auto sorted_sides = [](const std::vector<QuestionRecord>& rs) {
        auto split = split_certain_uncertain(rs);
        std::sort(split.certain_ids.begin(), split.certain_ids.end());
        std::sort(split.uncertain_ids.begin(), split.uncertain_ids.end());
        return split;
    };
    const auto base = sorted_sides(records);
    for (std::size_t i = records.size(); i > 1; --i) {
        std::swap(records[i - 1], records[rng.next_u64() % i]);
    }
    const auto shuffled = sorted_sides(records);
    CHECK(base.certain_ids == shuffled.certain_ids);
    CHECK(base.uncertain_ids == shuffled.uncertain_ids);
}

// ---------------------------------------------------------------------------
// JSONL parsing
// ---------------------------------------------------------------------------

TEST_CASE("load_records: empty stream yields an empty list") {
    std::istringstream in("");
    CHECK(load_records(in).empty());
}

TEST_CASE("load_records: one line with optional fields absent") {
    std::istringstream in(R"({"id":"q1","question":"capital?","generated":"Paris",)"
                          R"("answers":["Paris","Rome"],"reference":["Paris"]})"
                          "\n");
    const auto records = load_records(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].id == "q1");
    CHECK(records[0].answers.size() == 2);
    CHECK(!records[0].answers[0].log_prob.has_value());
    CHECK(!records[0].answers[0].cluster_id.has_value());
    CHECK(!records[0].kernel.has_value());
    CHECK(!records[0].label.has_value());
}

TEST_CASE("load_records: full record with aligned optional arrays") {
    std::istringstream in(
        R"({"id":"q1","question":"?","generated":"A","answers":["A","B"],)"
        R"("answer_logprobs":[-0.1,-2.5],"clusters":[0,1],)"
        R"("kernel":[[0.7,0.1],[0.1,0.3]],"reference":["A"],"label":1,"extra":42})"
        "\n");
    const auto records = load_records(in);
    REQUIRE(records.size() == 1);
    const auto& r = records[0];
    CHECK(*r.answers[0].log_prob == -0.1);
    CHECK(*r.answers[1].cluster_id == 1);
    REQUIRE(r.kernel.has_value());
    CHECK((*r.kernel)[1][0] == 0.1);
    CHECK(*r.label == 1);
}

TEST_CASE("load_records: malformed lines carry their line number") {
    std::istringstream in("{\"id\":\"a\",\"answers\":[]}\nnot json at all\n");
    try {
        load_records(in);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("load_records: duplicate id cites the offending line") {
    std::string line1 = R"({"id":"dup","answers":["x"],"reference":["x"]})";
    std::string body;
    for (int i = 0; i < 7; ++i) {
        if (i == 0 || i == 6) {
            body += line1;
        } else {
            body += R"({"id":"q)" + std::to_string(i) + R"(","answers":["x"]})";
        }
        body += "\n";
    }
    std::istringstream in(body);
    try {
        load_records(in);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("dup") != std::string::npos);
    }
}

TEST_CASE("load_records: validation failures") {
    auto expect_throw = [](const std::string& line) {
        std::istringstream in(line + "\n");
        CHECK_THROWS_AS(load_records(in), parse_error);
    };
    expect_throw(R"({"question":"no id"})");
    expect_throw(R"({"id":"","answers":[]})");
    expect_throw(R"({"id":"a","answers":["x"],"answer_logprobs":[-0.1,-0.2]})");
    expect_throw(R"({"id":"a","answers":["x"],"answer_logprobs":[0.5]})");
    expect_throw(R"({"id":"a","answers":["x"],"clusters":[-1]})");
    expect_throw(R"({"id":"a","answers":["x","y"],"clusters":[0]})");
    expect_throw(R"({"id":"a","answers":["x"],"label":2})");
    expect_throw(R"({"id":"a","answers":["x","y"],"kernel":[[1.0]]})");
    expect_throw(R"({"id":"a","answers":[],"kernel":[[1.0,0.0]]})");
}

TEST_CASE("records: load -> save -> load round-trips to identical records") {
    const std::string body =
        R"({"id":"q1","question":"?","generated":"A","answers":["A","B"],)"
        R"("answer_logprobs":[-0.125,-2.5],"clusters":[0,1],)"
        R"("kernel":[[0.7,0.1],[0.1,0.3]],"reference":["A"],"label":1})"
        "\n"
        R"({"id":"q2","question":"x","generated":"y","answers":["y"],"reference":["z"]})"
        "\n";
    std::istringstream in(body);
    const auto records = load_records(in);

    std::ostringstream out;
    save_records(out, records);
    std::istringstream again(out.str());
    const auto reloaded = load_records(again);
    CHECK(reloaded == records);
}

TEST_CASE("records: mixed per-sample optional fields refuse to serialize") {
    QuestionRecord r;
    r.id = "m";
    AnswerSample a;
    a.text = "x";
    a.log_prob = -0.5;
    AnswerSample b;
    b.text = "y";
    r.answers = {a, b};
    std::ostringstream out;
    CHECK_THROWS_AS(save_records(out, {r}), invalid_input_error);
}
