// End-to-end checks of the CLI binary over temp files.

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "thinkrank/qrel_audit.hpp"
#include "thinkrank/trec_io.hpp"

namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

const std::string kCli = THINKRANK_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("thinkrank_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string run_cli_capture(const std::string& args, int& exit_code) {
    TempDir tmp;
    const std::string out_path = tmp.file("stdout.txt");
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_tiny_collection(const TempDir& tmp) {
    std::ostringstream corpus;
    for (int i = 0; i < 12; ++i) {
        corpus << R"({"_id":"d)" << i << R"(","title":"","text":"doc )" << i << " about "
               << (i % 2 == 0 ? "spruce trees" : "city planning") << R"("})" << '\n';
    }
    write_file(tmp.file("corpus.jsonl"), corpus.str());
    write_file(tmp.file("queries.jsonl"),
               R"({"_id":"q1","text":"spruce trees"})" "\n"
               R"({"_id":"q2","text":"city planning"})" "\n");
    write_file(tmp.file("qrels.txt"),
               "q1 0 d0 1\nq1 0 d2 1\nq1 0 d4 0\n"
               "q2 0 d1 1\nq2 0 d3 1\n");
}

} // namespace

TEST_CASE("--help exits 0, unknown flags exit 2") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("retrieve --definitely-not-a-flag") == 2);
    CHECK(run_cli("") == 2);  // a subcommand is required
}

TEST_CASE("index prints corpus statistics") {
    TempDir tmp;
    write_tiny_collection(tmp);
    int code = 0;
    const std::string stats =
        run_cli_capture("index --corpus " + tmp.file("corpus.jsonl"), code);
    REQUIRE(code == 0);
    CHECK(stats.find("documents 12") != std::string::npos);
    CHECK(stats.find("avgdl") != std::string::npos);
    CHECK(stats.find("vocabulary") != std::string::npos);
}

TEST_CASE("retrieve writes a valid run file") {
    TempDir tmp;
    write_tiny_collection(tmp);
    const int code = run_cli("retrieve --corpus " + tmp.file("corpus.jsonl") + " --queries " +
                             tmp.file("queries.jsonl") + " --k 5 --out " + tmp.file("run.trec"));
    REQUIRE(code == 0);
    std::ifstream in(tmp.file("run.trec"));
    auto run = thinkrank::parse_run(in);
    CHECK(run.size() > 0);
    CHECK(run[0].run_tag == "bm25");
}

TEST_CASE("missing input files exit with the configuration code") {
    CHECK(run_cli("evaluate --run /nonexistent.trec --qrels /nonexistent.qrels") == 5);
}

TEST_CASE("malformed input files exit with the parse code") {
    TempDir tmp;
    write_file(tmp.file("bad.qrels"), "only two fields\n");
    write_file(tmp.file("run.trec"), "q1 Q0 d1 1 0.5 t\n");
    CHECK(run_cli("evaluate --run " + tmp.file("run.trec") + " --qrels " +
                  tmp.file("bad.qrels")) == 3);
}

TEST_CASE("evaluate emits the requested metric columns") {
    TempDir tmp;
    write_tiny_collection(tmp);
    REQUIRE(run_cli("retrieve --corpus " + tmp.file("corpus.jsonl") + " --queries " +
                    tmp.file("queries.jsonl") + " --k 10 --out " + tmp.file("run.trec")) == 0);
    int code = 0;
    const std::string report =
        run_cli_capture("evaluate --run " + tmp.file("run.trec") + " --qrels " +
                            tmp.file("qrels.txt") + " --k 10 --metrics ndcg,judged",
                        code);
    REQUIRE(code == 0);
    CHECK(report.find("mean ndcg@10") != std::string::npos);
    CHECK(report.find("mean judged@10") != std::string::npos);
}

TEST_CASE("mock-backed rerank is deterministic across invocations") {
    TempDir tmp;
    write_tiny_collection(tmp);
    REQUIRE(run_cli("retrieve --corpus " + tmp.file("corpus.jsonl") + " --queries " +
                    tmp.file("queries.jsonl") + " --k 10 --out " + tmp.file("first.trec")) == 0);

    std::ostringstream script;
    script << R"({"match":"substring","pattern":"spruce","chain":"conifer reasoning","p_true":0.9})"
           << '\n'
           << R"({"default":true,"chain":"urban reasoning","p_true":0.2})" << '\n';
    write_file(tmp.file("mock.jsonl"), script.str());

    auto invoke = [&](const std::string& suffix) {
        return run_cli("rerank --run " + tmp.file("first.trec") + " --corpus " +
                       tmp.file("corpus.jsonl") + " --queries " + tmp.file("queries.jsonl") +
                       " --out " + tmp.file("out" + suffix + ".trec") + " --judgments " +
                       tmp.file("chains" + suffix + ".jsonl") +
                       " --backend mock --mock-script " + tmp.file("mock.jsonl") +
                       " --tag mocked");
    };
    REQUIRE(invoke("1") == 0);
    REQUIRE(invoke("2") == 0);
    const auto run1 = read_file(tmp.file("out1.trec"));
    CHECK_FALSE(run1.empty());
    CHECK(run1 == read_file(tmp.file("out2.trec")));
    CHECK(read_file(tmp.file("chains1.jsonl")) == read_file(tmp.file("chains2.jsonl")));
    CHECK(run1.find(" mocked") != std::string::npos);

    // the sidecar carries chains and scores
    const auto chains = read_file(tmp.file("chains1.jsonl"));
    CHECK(chains.find("conifer reasoning") != std::string::npos);
    CHECK(chains.find("\"mode\":\"reasoning\"") != std::string::npos);
}

TEST_CASE("paired-eval prints a single accuracy") {
    TempDir tmp;
    write_file(tmp.file("instances.jsonl"),
               R"({"id":"p1","q1":{"_id":"qa","text":"alpha"},"q2":{"_id":"qb","text":"beta"},)"
               R"("doc1":{"_id":"da","text":"alpha doc"},"doc2":{"_id":"db","text":"beta doc"}})"
               "\n");
    write_file(tmp.file("mock.jsonl"),
               R"({"match":"substring","pattern":"Query: alpha\n\nPassage: alpha doc","chain":"match","p_true":0.95})"
               "\n"
               R"({"match":"substring","pattern":"Query: beta\n\nPassage: beta doc","chain":"match","p_true":0.95})"
               "\n"
               R"({"default":true,"chain":"mismatch","p_true":0.05})" "\n");
    int code = 0;
    const std::string output = run_cli_capture(
        "paired-eval --instances " + tmp.file("instances.jsonl") +
            " --backend mock --mock-script " + tmp.file("mock.jsonl"),
        code);
    REQUIRE(code == 0);
    CHECK(output.find("pairwise_accuracy 1/1 = 1") != std::string::npos);
}

TEST_CASE("distill pipeline runs end to end over files") {
    TempDir tmp;
    // pools: 8 entries per pool
    std::ostringstream pools, corpus, queries;
    const char* pool_names[] = {"official_positive", "easy_negative", "hard_negative_1_5",
                                "hard_negative_5_10"};
    int serial = 0;
    for (const char* pool : pool_names) {
        for (int i = 0; i < 8; ++i) {
            const std::string qid = "q" + std::to_string(serial);
            const std::string did = "d" + std::to_string(serial);
            const bool implied = std::string(pool) == "official_positive";
            pools << R"({"query_id":")" << qid << R"(","doc_id":")" << did
                  << R"(","implied_label":)" << (implied ? "true" : "false") << R"(,"pool":")"
                  << pool << R"("})" << '\n';
            corpus << R"({"_id":")" << did << R"(","text":"passage )" << serial << R"("})"
                   << '\n';
            queries << R"({"_id":")" << qid << R"(","text":"query )" << serial << R"("})"
                    << '\n';
            ++serial;
        }
    }
    write_file(tmp.file("pools.jsonl"), pools.str());
    write_file(tmp.file("corpus.jsonl"), corpus.str());
    write_file(tmp.file("queries.jsonl"), queries.str());
    write_file(tmp.file("mix.cfg"),
               "proportion official_positive 0.25\n"
               "proportion easy_negative 0.25\n"
               "proportion hard_negative_1_5 0.25\n"
               "proportion hard_negative_5_10 0.25\n"
               "target_total 16\n");
    // teacher: everything true
    write_file(tmp.file("teacher.jsonl"),
               R"({"default":true,"text":"thinking</think> true"})" "\n");
    // scorer: agrees (true) everywhere
    write_file(tmp.file("scorer.jsonl"), R"({"default":true,"chain":"ok","p_true":0.9})" "\n");

    REQUIRE(run_cli("distill-sample --pools " + tmp.file("pools.jsonl") + " --mix " +
                    tmp.file("mix.cfg") + " --seed 5 --out " + tmp.file("sampled.jsonl")) == 0);
    REQUIRE(run_cli("distill-generate --examples " + tmp.file("sampled.jsonl") + " --corpus " +
                    tmp.file("corpus.jsonl") + " --queries " + tmp.file("queries.jsonl") +
                    " --journal " + tmp.file("journal.jsonl") + " --out " +
                    tmp.file("generated.jsonl") + " --backend mock --mock-script " +
                    tmp.file("teacher.jsonl")) == 0);
    REQUIRE(run_cli("distill-filter --examples " + tmp.file("generated.jsonl") +
                    " --stage agreement --out " + tmp.file("agreed.jsonl")) == 0);
    REQUIRE(run_cli("distill-filter --examples " + tmp.file("agreed.jsonl") +
                    " --stage self --corpus " + tmp.file("corpus.jsonl") + " --queries " +
                    tmp.file("queries.jsonl") + " --out " + tmp.file("selffiltered.jsonl") +
                    " --backend mock --mock-script " + tmp.file("scorer.jsonl")) == 0);
    int code = 0;
    const std::string output = run_cli_capture(
        "distill-export --examples " + tmp.file("selffiltered.jsonl") + " --corpus " +
            tmp.file("corpus.jsonl") + " --queries " + tmp.file("queries.jsonl") + " --out " +
            tmp.file("train.jsonl") + " --stats-out " + tmp.file("hist.csv") +
            " --train-config " + tmp.file("train.cfg"),
        code);
    REQUIRE(code == 0);
    // teacher says true everywhere: positives survive, negatives do not
    CHECK(output.find("kept_positives 4") != std::string::npos);
    CHECK(output.find("kept_negatives 0") != std::string::npos);
    CHECK(read_file(tmp.file("train.jsonl")).find("\"prompt\"") != std::string::npos);
    CHECK(read_file(tmp.file("hist.csv")).rfind("bin_lo", 0) == 0);
    CHECK(read_file(tmp.file("train.cfg")).find("lora_rank 32") != std::string::npos);
    // the journal makes a re-run skip everything
    const std::string regen = run_cli_capture(
        "distill-generate --examples " + tmp.file("sampled.jsonl") + " --corpus " +
            tmp.file("corpus.jsonl") + " --queries " + tmp.file("queries.jsonl") +
            " --journal " + tmp.file("journal.jsonl") + " --out " + tmp.file("regen.jsonl") +
            " --backend mock --mock-script " + tmp.file("teacher.jsonl"),
        code);
    REQUIRE(code == 0);
    CHECK(regen.find("skipped 16") != std::string::npos);
}

TEST_CASE("audit workflow over files") {
    TempDir tmp;
    write_tiny_collection(tmp);
    // run ranks an unjudged doc (d6) into the top 3 for q1
    write_file(tmp.file("run.trec"),
               "q1 Q0 d0 1 0.900000 tagA\n"
               "q1 Q0 d6 2 0.800000 tagA\n"
               "q1 Q0 d2 3 0.700000 tagA\n"
               "q2 Q0 d1 1 0.900000 tagA\n"
               "q2 Q0 d3 2 0.800000 tagA\n");
    REQUIRE(run_cli("audit-find --runs " + tmp.file("run.trec") + " --qrels " +
                    tmp.file("qrels.txt") + " --corpus " + tmp.file("corpus.jsonl") +
                    " --queries " + tmp.file("queries.jsonl") + " --k 3 --rel-threshold 1" +
                    " --out " + tmp.file("sheet.csv")) == 0);
    // annotate every surfaced row with grade 2
    {
        std::ifstream sheet_in(tmp.file("sheet.csv"));
        auto items = thinkrank::read_annotation_sheet(sheet_in);
        REQUIRE(items.size() == 1);  // only q1/d6 is unjudged in the top 3
        CHECK(items[0].doc_id == "d6");
        for (auto& item : items) item.proposed_grade = 2;
        std::ofstream sheet_out(tmp.file("sheet_done.csv"));
        thinkrank::write_annotation_sheet(items, sheet_out);
    }
    REQUIRE(run_cli("audit-merge --qrels " + tmp.file("qrels.txt") + " --sheet " +
                    tmp.file("sheet_done.csv") + " --out " + tmp.file("fixed.qrels") +
                    " --changelog " + tmp.file("changes.txt")) == 0);
    CHECK(read_file(tmp.file("changes.txt")).find("total") != std::string::npos);

    int code = 0;
    const std::string delta = run_cli_capture(
        "audit-delta --runs " + tmp.file("run.trec") + " --qrels-original " +
            tmp.file("qrels.txt") + " --qrels-fixed " + tmp.file("fixed.qrels") + " --k 3",
        code);
    REQUIRE(code == 0);
    CHECK(delta.find("tagA") != std::string::npos);
}

TEST_CASE("report renders keyed metrics as a table") {
    TempDir tmp;
    write_file(tmp.file("report.keyed"),
               "queries 2\n"
               "mean ndcg@10 0.750000\n"
               "query q1 ndcg@10 1.000000\n"
               "query q2 ndcg@10 0.500000\n");
    int code = 0;
    const std::string table =
        run_cli_capture("report --in " + tmp.file("report.keyed") + " --format table", code);
    REQUIRE(code == 0);
    CHECK(table.find("ndcg@10") != std::string::npos);
    CHECK(table.find("mean") != std::string::npos);
    const std::string csv =
        run_cli_capture("report --in " + tmp.file("report.keyed") + " --format csv", code);
    REQUIRE(code == 0);
    CHECK(csv.rfind("query,", 0) == 0);
}

TEST_SUITE_END();
