#include <random>
#include <set>
#include <sstream>

#include "doctest.h"

#include "thinkrank/distill.hpp"

using namespace thinkrank;

TEST_SUITE_BEGIN("distill");

namespace {

std::map<Pool, std::vector<PoolEntry>> uniform_pools(std::size_t per_pool) {
    std::map<Pool, std::vector<PoolEntry>> pools;
    for (std::size_t p = 0; p < kPoolCount; ++p) {
        const auto pool = static_cast<Pool>(p);
        const bool implied = pool == Pool::official_positive;
        for (std::size_t i = 0; i < per_pool; ++i) {
            pools[pool].push_back({"q" + std::to_string(p) + "_" + std::to_string(i),
                                   "d" + std::to_string(p) + "_" + std::to_string(i), implied});
        }
    }
    return pools;
}

// Generated example with a given teacher verdict, bypassing the backend.
DistillExample generated_example(const std::string& qid, const std::string& did, Pool pool,
                                 bool implied, bool teacher,
                                 const std::string& chain = "some reasoning") {
    DistillExample e;
    e.query_id = qid;
    e.doc_id = did;
    e.pool = pool;
    e.implied_label = implied;
    e.chain = chain;
    e.teacher_prediction = teacher;
    e.status = ExampleStatus::generated;
    return e;
}

struct Lookup {
    std::map<std::string, Query> queries;
    std::map<std::string, Document> docs;
};

Lookup lookup_for(const std::vector<DistillExample>& examples) {
    Lookup lk;
    for (const auto& e : examples) {
        lk.queries[e.query_id] = Query{e.query_id, "query text " + e.query_id, {}, {}};
        lk.docs[e.doc_id] = Document{e.doc_id, "", "doc body " + e.doc_id + " ."};
    }
    return lk;
}

GenParams generation_params() {
    GenParams p;
    p.max_tokens = 64;
    return p;
}

GenParams scorer_params() {
    GenParams p;
    p.max_tokens = 64;
    p.stop_sequences = {kThinkClose};
    return p;
}

} // namespace

TEST_CASE("apportion: equal quarters and largest remainder") {
    CHECK(apportion({0.25, 0.25, 0.25, 0.25}, 100) ==
          std::array<std::size_t, 4>{25, 25, 25, 25});
    CHECK(apportion({0.5, 0.5, 0.0, 0.0}, 101) == std::array<std::size_t, 4>{51, 50, 0, 0});
    CHECK(apportion({0.6, 0.2, 0.1, 0.1}, 10) == std::array<std::size_t, 4>{6, 2, 1, 1});
    // quotas always sum to the target
    std::mt19937 rng(67);
    for (int round = 0; round < 50; ++round) {
        std::array<double, 4> p{};
        double sum = 0;
        for (auto& x : p) sum += (x = 1 + rng() % 100);
        for (auto& x : p) x /= sum;
        const std::size_t total = rng() % 1000;
        auto q = apportion(p, total);
        CHECK(q[0] + q[1] + q[2] + q[3] == total);
    }
}

TEST_CASE("sample_candidates draws the configured mix deterministically") {
    auto pools = uniform_pools(50);
    MixSpec spec;
    spec.target_total = 100;
    auto first = sample_candidates(pools, spec, 42);
    auto second = sample_candidates(pools, spec, 42);
    REQUIRE(first.size() == 100);
    std::map<Pool, int> counts;
    for (const auto& e : first) ++counts[e.pool];
    for (std::size_t p = 0; p < kPoolCount; ++p) CHECK(counts[static_cast<Pool>(p)] == 25);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].query_id == second[i].query_id);
        CHECK(first[i].doc_id == second[i].doc_id);
    }
    // a different seed gives a different draw
    auto third = sample_candidates(pools, spec, 43);
    bool any_difference = false;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i].doc_id != third[i].doc_id) any_difference = true;
    }
    CHECK(any_difference);
    // sampling without replacement: no duplicate pairs
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : first) CHECK(seen.insert({e.query_id, e.doc_id}).second);
}

TEST_CASE("sample_candidates names the short pool") {
    auto pools = uniform_pools(10);
    MixSpec spec;
    spec.target_total = 100;  // wants 25 per pool, only 10 available
    CHECK_THROWS_WITH_AS(sample_candidates(pools, spec, 1),
                         doctest::Contains("official_positive"), ValidationError);
    CHECK_THROWS_WITH_AS(sample_candidates(pools, spec, 1), doctest::Contains("short by 15"),
                         ValidationError);
}

TEST_CASE("parse_teacher_verdict accepts the documented shapes") {
    CHECK(parse_teacher_verdict("reasoning…</think> true").value() == true);
    CHECK(parse_teacher_verdict("reasoning…</think>\nfalse.").value() == false);
    CHECK(parse_teacher_verdict("reasoning…</think> TRUE!").value() == true);
    CHECK_FALSE(parse_teacher_verdict("reasoning… so it is relevant").has_value());
    CHECK_FALSE(parse_teacher_verdict("…</think> maybe true").has_value());
    CHECK_FALSE(parse_teacher_verdict("…</think>").has_value());
    // no marker: trailing-20-character scan
    CHECK(parse_teacher_verdict("cut off but the answer is true").value() == true);
    CHECK(parse_teacher_verdict("cut off, clearly false here").value() == false);
    CHECK_FALSE(parse_teacher_verdict("ambiguous true false tail").has_value());
    CHECK_FALSE(parse_teacher_verdict("true but this tail has no verdict word").has_value());
}

TEST_CASE("generate_traces parses verdicts and journals outcomes") {
    std::vector<DistillExample> examples;
    for (int i = 0; i < 3; ++i) {
        DistillExample e;
        e.query_id = "q" + std::to_string(i);
        e.doc_id = "d" + std::to_string(i);
        e.pool = Pool::official_positive;
        e.implied_label = true;
        examples.push_back(e);
    }
    auto lk = lookup_for(examples);

    MockBackend mock;
    mock.register_rule(MockBackend::Match::substring, "doc body d0",
                       {"thinking about it</think> true", {}});
    mock.register_rule(MockBackend::Match::substring, "doc body d1",
                       {"hmm</think> false", {}});
    mock.register_rule(MockBackend::Match::substring, "doc body d2",
                       {"no verdict emitted whatsoever", {}});

    std::ostringstream journal;
    auto report = generate_traces(mock, examples, lk.queries, lk.docs, generation_params(),
                                  PromptTemplate::standard(), &journal, 2);
    CHECK(report.generated == 2);
    CHECK(report.malformed == 1);
    CHECK(examples[0].teacher_prediction.value() == true);
    CHECK(examples[0].chain == "thinking about it");
    CHECK(examples[1].teacher_prediction.value() == false);
    CHECK(examples[2].status == ExampleStatus::dropped_malformed);

    std::istringstream journal_in(journal.str());
    auto records = load_journal(journal_in);
    CHECK(records.size() == 3);
}

TEST_CASE("generation conserves examples: generated + malformed = total") {
    const int n = 1000;
    std::vector<DistillExample> examples;
    MockBackend mock;
    std::mt19937 rng(71);
    for (int i = 0; i < n; ++i) {
        DistillExample e;
        e.query_id = "q" + std::to_string(i);
        e.doc_id = "d" + std::to_string(i);
        e.pool = static_cast<Pool>(i % kPoolCount);
        examples.push_back(e);
        const int kind = static_cast<int>(rng() % 3);
        const char* text = kind == 0   ? "chain</think> true"
                           : kind == 1 ? "chain</think> false"
                                       : "chain with nothing conclusive";
        mock.register_rule(MockBackend::Match::substring, "doc body d" + std::to_string(i) + " ",
                           {text, {}});
    }
    auto lk = lookup_for(examples);
    auto report = generate_traces(mock, examples, lk.queries, lk.docs, generation_params(),
                                  PromptTemplate::standard(), nullptr, 8);
    CHECK(report.generated + report.malformed == n);

    std::size_t pending = 0, generated = 0, dropped = 0, kept = 0;
    for (const auto& e : examples) {
        switch (e.status) {
            case ExampleStatus::pending: ++pending; break;
            case ExampleStatus::generated: ++generated; break;
            case ExampleStatus::kept: ++kept; break;
            default: ++dropped; break;
        }
    }
    CHECK(pending + generated + dropped + kept == static_cast<std::size_t>(n));
    CHECK(pending == 0);
}

TEST_CASE("an interrupted batch resumes from the journal without re-requesting") {
    std::vector<DistillExample> examples;
    for (int i = 0; i < 6; ++i) {
        DistillExample e;
        e.query_id = "q" + std::to_string(i);
        e.doc_id = "d" + std::to_string(i);
        e.pool = Pool::easy_negative;
        examples.push_back(e);
    }
    auto lk = lookup_for(examples);

    MockBackend mock;
    mock.set_default({"chain</think> false", {}});

    // First pass: only the first 3 get processed (simulated interruption by
    // journaling a truncated run).
    std::ostringstream journal;
    auto partial = examples;
    partial.resize(3);
    generate_traces(mock, partial, lk.queries, lk.docs, generation_params(),
                    PromptTemplate::standard(), &journal, 1);
    const int calls_after_first = mock.call_count();
    CHECK(calls_after_first == 3);

    // Resume: replay the journal onto the full set, then generate.
    std::istringstream journal_in(journal.str());
    auto records = load_journal(journal_in);
    CHECK(apply_journal(examples, records) == 3);
    auto report = generate_traces(mock, examples, lk.queries, lk.docs, generation_params(),
                                  PromptTemplate::standard(), nullptr, 1);
    CHECK(report.skipped == 3);
    CHECK(report.generated == 3);
    CHECK(mock.call_count() - calls_after_first == 3);  // no re-requests
    for (const auto& e : examples) {
        CHECK(e.status == ExampleStatus::generated);
        CHECK(e.teacher_prediction.value() == false);
    }
}

TEST_CASE("agreement filter drops trusted disagreements only") {
    std::vector<DistillExample> examples;
    examples.push_back(
        generated_example("q1", "d1", Pool::official_positive, true, false));  // disagrees
    examples.push_back(generated_example("q2", "d2", Pool::official_positive, true, true));
    examples.push_back(
        generated_example("q3", "d3", Pool::hard_negative_1_5, false, true));  // untrusted
    auto report =
        agreement_filter(examples, {Pool::official_positive, Pool::easy_negative});
    CHECK(examples[0].status == ExampleStatus::dropped_agreement);
    CHECK(examples[1].status == ExampleStatus::generated);
    CHECK(examples[2].status == ExampleStatus::generated);  // passes through
    CHECK(report.per_pool.at(Pool::hard_negative_1_5).disagreed == 1);
    CHECK(report.trusted_checked == 2);
    CHECK(report.trusted_dropped == 1);
}

TEST_CASE("a planted 15% disagreement reports exactly 0.15") {
    std::vector<DistillExample> examples;
    // trusted: 100 positives + 100 easy negatives, 30 planted disagreements
    for (int i = 0; i < 100; ++i) {
        const bool disagree = i < 15;
        examples.push_back(generated_example("qp" + std::to_string(i), "dp" + std::to_string(i),
                                             Pool::official_positive, true, !disagree));
        examples.push_back(generated_example("qn" + std::to_string(i), "dn" + std::to_string(i),
                                             Pool::easy_negative, false, disagree));
    }
    auto report = agreement_filter(examples, {Pool::official_positive, Pool::easy_negative});
    CHECK(report.trusted_checked == 200);
    CHECK(report.trusted_dropped == 30);
    CHECK(report.trusted_drop_rate() == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(report.per_pool.at(Pool::official_positive).rate() ==
          doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("self filter drops scorer/teacher disagreements") {
    std::vector<DistillExample> examples;
    for (int i = 0; i < 50; ++i) {
        examples.push_back(generated_example("q" + std::to_string(i), "d" + std::to_string(i),
                                             Pool::hard_negative_5_10, false, true));
    }
    auto lk = lookup_for(examples);

    SUBCASE("scorer agrees everywhere: zero drops") {
        MockBackend scorer;
        scorer.set_default({"agree</think>", MockBackend::binary_answer(0.9)});  // true
        auto report = self_filter(scorer, examples, lk.queries, lk.docs, scorer_params(),
                                  PromptTemplate::standard(), 4);
        CHECK(report.checked == 50);
        CHECK(report.dropped == 0);
        CHECK(report.drop_rate() == doctest::Approx(0.0));
    }

    SUBCASE("scorer scripted to disagree on 10%") {
        MockBackend scorer;
        for (int i = 0; i < 5; ++i) {
            scorer.register_rule(MockBackend::Match::substring,
                                 "doc body d" + std::to_string(i) + " ",
                                 {"disagree</think>", MockBackend::binary_answer(0.05)});
        }
        scorer.set_default({"agree</think>", MockBackend::binary_answer(0.95)});
        auto report = self_filter(scorer, examples, lk.queries, lk.docs, scorer_params(),
                                  PromptTemplate::standard(), 4);
        CHECK(report.checked == 50);
        CHECK(report.dropped == 5);
        CHECK(report.drop_rate() == doctest::Approx(0.10).epsilon(1e-12));
        for (int i = 0; i < 5; ++i) {
            CHECK(examples[i].status == ExampleStatus::dropped_self_filter);
            CHECK(examples[i].self_prediction.value() == false);
        }
    }

    SUBCASE("scorer failure retains and flags the example") {
        MockBackend scorer;
        scorer.register_rule(MockBackend::Match::substring, "doc body d0 ",
                             {"broken</think>", {{" neither", -0.5}, {" nope", -1.0}}});
        scorer.set_default({"agree</think>", MockBackend::binary_answer(0.9)});
        auto report = self_filter(scorer, examples, lk.queries, lk.docs, scorer_params(),
                                  PromptTemplate::standard(), 4);
        CHECK(report.flagged == 1);
        CHECK(report.dropped == 0);
        CHECK(examples[0].status == ExampleStatus::generated);  // retained
    }
}

TEST_CASE("assemble_mix reproduces the scaled final composition") {
    std::vector<DistillExample> examples;
    int serial = 0;
    auto add = [&](Pool pool, bool teacher, int count, bool implied) {
        for (int i = 0; i < count; ++i) {
            examples.push_back(generated_example("q" + std::to_string(serial),
                                                 "d" + std::to_string(serial), pool, implied,
                                                 teacher));
            ++serial;
        }
    };
    // scaled /1000 from the final mix: 136 positives, 154 easy negatives,
    // 96 mined negatives; extra teacher-true negatives are ineligible.
    add(Pool::official_positive, true, 136, true);
    add(Pool::official_positive, false, 10, true);   // teacher-false positives: not eligible
    add(Pool::easy_negative, false, 154, false);
    add(Pool::easy_negative, true, 20, false);       // teacher-true negatives: not eligible
    add(Pool::hard_negative_1_5, false, 40, false);
    add(Pool::hard_negative_5_10, false, 56, false);
    add(Pool::hard_negative_5_10, true, 30, false);

    MixSpec spec;  // target_total = 0: take everything eligible
    auto report = assemble_mix(examples, spec);
    CHECK(report.kept_positives == 136);
    CHECK(report.kept_per_pool.at(Pool::official_positive) == 136);
    CHECK(report.kept_per_pool.at(Pool::easy_negative) == 154);
    CHECK(report.kept_per_pool.at(Pool::hard_negative_1_5) +
              report.kept_per_pool.at(Pool::hard_negative_5_10) ==
          96);
    CHECK(report.kept_negatives == 250);

    std::size_t kept = 0;
    for (const auto& e : examples) {
        if (e.status == ExampleStatus::kept) ++kept;
    }
    CHECK(kept == 136 + 154 + 96);
}

TEST_CASE("assemble_mix warns when no negatives survive") {
    std::vector<DistillExample> examples{
        generated_example("q1", "d1", Pool::official_positive, true, true)};
    auto report = assemble_mix(examples, MixSpec{});
    CHECK(report.kept_negatives == 0);
    REQUIRE_FALSE(report.warnings.empty());
    CHECK(report.warnings[0].find("no negatives") != std::string::npos);
}

TEST_CASE("the generation-set positive rate is reported") {
    std::vector<DistillExample> examples;
    for (int i = 0; i < 1000; ++i) {
        examples.push_back(generated_example("q" + std::to_string(i), "d" + std::to_string(i),
                                             Pool::official_positive, true, i < 629));
    }
    auto report = assemble_mix(examples, MixSpec{});
    CHECK(report.teacher_true_rate == doctest::Approx(0.629).epsilon(1e-12));
}

TEST_CASE("training export writes prompt/completion records that round-trip") {
    std::vector<DistillExample> examples{
        generated_example("q1", "d1", Pool::official_positive, true, true, "the reasoning"),
    };
    examples[0].status = ExampleStatus::kept;
    auto lk = lookup_for(examples);

    std::ostringstream out;
    export_training(examples, lk.queries, lk.docs, PromptTemplate::standard(), out);
    std::istringstream in(out.str());
    auto records = load_training(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].prompt.size() >= 7);
    CHECK(records[0].prompt.substr(records[0].prompt.size() - 7) == "<think>");
    CHECK(records[0].completion == "the reasoning</think> true");
    CHECK(records[0].label == true);
    CHECK(records[0].pool == Pool::official_positive);

    // reload -> re-export is byte-identical
    std::ostringstream out2;
    std::vector<DistillExample> reloaded = examples;
    export_training(reloaded, lk.queries, lk.docs, PromptTemplate::standard(), out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("chain length stats: planted lengths give mean 150") {
    std::vector<DistillExample> examples;
    auto chain_of = [](std::size_t words) {
        std::string c;
        for (std::size_t i = 0; i < words; ++i) c += "w ";
        return c;
    };
    for (int i = 0; i < 10; ++i) {
        examples.push_back(generated_example("qa" + std::to_string(i), "da" + std::to_string(i),
                                             Pool::official_positive, true, true,
                                             chain_of(100)));
        examples.push_back(generated_example("qb" + std::to_string(i), "db" + std::to_string(i),
                                             Pool::official_positive, true, true,
                                             chain_of(200)));
    }
    auto stats = chain_length_stats(examples, 50);
    CHECK(stats.count == 20);
    CHECK(stats.mean == doctest::Approx(150.0));
    CHECK(stats.median == doctest::Approx(150.0));
    std::size_t total = 0;
    for (const auto& [lo, count] : stats.bins) total += count;
    CHECK(total == 20);
    std::ostringstream csv;
    write_histogram_csv(stats, csv);
    CHECK(csv.str().rfind("bin_lo,bin_hi,count\n", 0) == 0);
}

TEST_CASE("agreement and self filters commute on per-example predicates") {
    auto build = [] {
        std::vector<DistillExample> examples;
        for (int i = 0; i < 40; ++i) {
            // teacher disagrees with label on i%4==0; scorer disagrees with
            // teacher on i%5==0
            examples.push_back(generated_example("q" + std::to_string(i),
                                                 "d" + std::to_string(i),
                                                 Pool::official_positive, true, i % 4 != 0));
        }
        return examples;
    };
    auto self_filter_with_mock = [](std::vector<DistillExample>& examples) {
        MockBackend scorer;
        for (int i = 0; i < 40; i += 5) {
            const bool teacher = i % 4 != 0;
            scorer.register_rule(MockBackend::Match::substring,
                                 "doc body d" + std::to_string(i) + " ",
                                 {"flip</think>", MockBackend::binary_answer(teacher ? 0.1 : 0.9)});
        }
        scorer.set_default({"ok</think>", MockBackend::binary_answer(0.9)});
        // default predicts true; examples with teacher false and not scripted
        // would flip, so script agreement for them explicitly
        for (int i = 0; i < 40; ++i) {
            if (i % 5 == 0) continue;
            const bool teacher = i % 4 != 0;
            scorer.register_rule(MockBackend::Match::substring,
                                 "doc body d" + std::to_string(i) + " ",
                                 {"ok</think>", MockBackend::binary_answer(teacher ? 0.9 : 0.1)});
        }
        auto lk = lookup_for(examples);
        self_filter(scorer, examples, lk.queries, lk.docs, scorer_params(),
                    PromptTemplate::standard(), 1);
    };

    auto a = build();
    agreement_filter(a, {Pool::official_positive});
    self_filter_with_mock(a);

    auto b = build();
    self_filter_with_mock(b);
    agreement_filter(b, {Pool::official_positive});

    std::set<std::string> kept_a, kept_b;
    for (auto& e : a) {
        if (e.status == ExampleStatus::generated) kept_a.insert(e.doc_id);
    }
    for (auto& e : b) {
        if (e.status == ExampleStatus::generated) kept_b.insert(e.doc_id);
    }
    CHECK(kept_a == kept_b);
}

TEST_CASE("examples JSONL round-trips") {
    std::vector<DistillExample> examples{
        generated_example("q1", "d1", Pool::hard_negative_1_5, false, true, "why it matches"),
    };
    examples[0].self_prediction = false;
    examples[0].status = ExampleStatus::dropped_self_filter;
    std::ostringstream out;
    write_examples(examples, out);
    std::istringstream in(out.str());
    auto reloaded = load_examples(in);
    REQUIRE(reloaded.size() == 1);
    CHECK(reloaded[0].query_id == "q1");
    CHECK(reloaded[0].pool == Pool::hard_negative_1_5);
    CHECK(reloaded[0].implied_label == false);
    CHECK(reloaded[0].teacher_prediction.value() == true);
    CHECK(reloaded[0].self_prediction.value() == false);
    CHECK(reloaded[0].status == ExampleStatus::dropped_self_filter);
    CHECK(reloaded[0].chain == "why it matches");
}

TEST_CASE("mix spec file loads and validates") {
    std::istringstream in(
        "# mix\n"
        "proportion official_positive 0.5\n"
        "proportion easy_negative 0.25\n"
        "proportion hard_negative_1_5 0.0\n"
        "proportion hard_negative_5_10 0.25\n"
        "target_total 200\n"
        "positive_source official_positive\n"
        "negative_sources easy_negative hard_negative_5_10\n");
    auto spec = load_mix_spec(in);
    CHECK(spec.target_total == 200);
    CHECK(spec.proportions[0] == doctest::Approx(0.5));
    CHECK(spec.negative_sources.size() == 2);

    std::istringstream bad(
        "proportion official_positive 0.9\n"
        "proportion easy_negative 0.3\n"
        "proportion hard_negative_1_5 0.0\n"
        "proportion hard_negative_5_10 0.0\n");
    CHECK_THROWS_AS(load_mix_spec(bad), ValidationError);
}

TEST_CASE("pool entry files dedupe repeated pairs within a pool") {
    std::istringstream in(
        R"({"query_id":"q1","doc_id":"d1","implied_label":true,"pool":"official_positive"})"
        "\n"
        R"({"query_id":"q1","doc_id":"d1","implied_label":true,"pool":"official_positive"})"
        "\n"
        R"({"query_id":"q1","doc_id":"d1","implied_label":false,"pool":"easy_negative"})"
        "\n");
    auto pools = load_pool_entries(in);
    CHECK(pools.at(Pool::official_positive).size() == 1);
    CHECK(pools.at(Pool::easy_negative).size() == 1);
}

TEST_CASE("dropped examples never return to kept") {
    std::vector<DistillExample> examples{
        generated_example("q1", "d1", Pool::official_positive, true, false)};
    agreement_filter(examples, {Pool::official_positive});
    REQUIRE(examples[0].status == ExampleStatus::dropped_agreement);
    assemble_mix(examples, MixSpec{});
    CHECK(examples[0].status == ExampleStatus::dropped_agreement);
}

TEST_CASE("fixed seed plus mock backend gives a byte-identical export") {
    auto run_pipeline = [] {
        auto pools = uniform_pools(30);
        MixSpec spec;
        spec.target_total = 60;
        auto examples = sample_candidates(pools, spec, 99);
        auto lk = lookup_for(examples);

        MockBackend teacher;
        // teacher answers by pool: positives true, the rest alternating
        teacher.register_rule(MockBackend::Match::substring, "doc body d0_",
                              {"supportive chain</think> true", {}});
        teacher.set_default({"skeptical chain</think> false", {}});
        generate_traces(teacher, examples, lk.queries, lk.docs, generation_params(),
                        PromptTemplate::standard(), nullptr, 4);
        agreement_filter(examples, {Pool::official_positive, Pool::easy_negative});
        assemble_mix(examples, MixSpec{});

        std::ostringstream out;
        export_training(examples, lk.queries, lk.docs, PromptTemplate::standard(), out);
        return out.str();
    };
    const std::string first = run_pipeline();
    CHECK_FALSE(first.empty());
    CHECK(first == run_pipeline());
}

TEST_CASE("training config template names the adapter hyperparameters") {
    std::ostringstream out;
    write_training_config_template(out);
    CHECK(out.str().find("lora_rank 32") != std::string::npos);
    CHECK(out.str().find("lora_alpha 64") != std::string::npos);
}

TEST_SUITE_END();
