// thinkrank: BM25 first-stage retrieval, a <think>-protocol pointwise
// reranker over a completions backend, IR metrics, a reasoning-trace
// distillation pipeline, and a qrel audit workflow. One subcommand per
// pipeline stage; all inputs and outputs are files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "thinkrank/backend.hpp"
#include "thinkrank/bm25.hpp"
#include "thinkrank/core.hpp"
#include "thinkrank/distill.hpp"
#include "thinkrank/metrics.hpp"
#include "thinkrank/qrel_audit.hpp"
#include "thinkrank/rerank.hpp"
#include "thinkrank/run_config.hpp"
#include "thinkrank/trec_io.hpp"

namespace {

using namespace thinkrank;
using nlohmann::json;

// Exit codes, documented in the README: 0 success, 1 unexpected failure,
// 2 usage, 3 input parse, 4 validation, 5 configuration, 6 backend.
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitValidation = 4;
constexpr int kExitConfig = 5;
constexpr int kExitBackend = 6;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file \"" + path + "\"");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file \"" + path + "\"");
    return out;
}

std::vector<Document> read_corpus(const std::string& path) {
    auto in = open_input(path);
    return load_corpus(in);
}

std::vector<Query> read_queries(const std::string& path) {
    auto in = open_input(path);
    return load_queries(in);
}

std::vector<QrelEntry> read_qrels(const std::string& path) {
    auto in = open_input(path);
    return parse_qrels(in);
}

std::vector<RunEntry> read_run(const std::string& path, bool allow_foreign) {
    auto in = open_input(path);
    return parse_run(in, allow_foreign);
}

std::unordered_set<std::string> read_stopwords(const std::string& path) {
    auto in = open_input(path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') words.insert(line);
    }
    return words;
}

// Mock script JSONL: {"match":"substring"|"prefix","pattern":...,
// "chain":...,"p_true":...} with optional "text" overriding the canned
// completion; {"default":true,...} sets the fallback response.
void load_mock_script(std::istream& in, MockBackend& mock) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(line_no, "mock script line is not a JSON object");
        }
        MockBackend::Response response;
        const std::string chain = rec.value("chain", std::string{});
        if (rec.contains("p_true")) {
            const double p = rec["p_true"].get<double>();
            if (p <= 0.0 || p >= 1.0) {
                throw ParseError(line_no, "p_true must lie strictly inside (0,1)");
            }
            response.answer_alternatives = MockBackend::binary_answer(p);
            response.text = chain + kThinkClose + (p > 0.5 ? " true" : " false");
        }
        if (rec.contains("text")) response.text = rec["text"].get<std::string>();

        if (rec.value("default", false)) {
            mock.set_default(std::move(response));
            continue;
        }
        const std::string kind = rec.value("match", "substring");
        if (kind != "substring" && kind != "prefix") {
            throw ParseError(line_no, "match must be \"substring\" or \"prefix\"");
        }
        if (!rec.contains("pattern")) throw ParseError(line_no, "rule lacks \"pattern\"");
        mock.register_rule(kind == "prefix" ? MockBackend::Match::prefix
                                            : MockBackend::Match::substring,
                           rec["pattern"].get<std::string>(), std::move(response));
    }
}

struct BackendFlags {
    std::string backend_kind = "http";
    std::string mock_script;
    std::string config_path;
};

// Builds the effective RunConfig: config file first, then flag overrides.
RunConfig effective_config(const BackendFlags& flags, const CLI::App* cmd) {
    RunConfig config;
    if (!flags.config_path.empty()) {
        auto in = open_input(flags.config_path);
        config = load_run_config(in);
    }
    auto override_int = [&](const char* name, int& target) {
        if (auto* opt = cmd->get_option_no_throw(name); opt && opt->count() > 0) {
            target = std::stoi(opt->as<std::string>());
        }
    };
    if (auto* opt = cmd->get_option_no_throw("--endpoint"); opt && opt->count() > 0) {
        config.backend.endpoint_url = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--model"); opt && opt->count() > 0) {
        config.backend.model_name = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--mode"); opt && opt->count() > 0) {
        config.mode = judge_mode_from_name(opt->as<std::string>());
    }
    if (auto* opt = cmd->get_option_no_throw("--tag"); opt && opt->count() > 0) {
        config.run_tag = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--template"); opt && opt->count() > 0) {
        config.template_path = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--prompt-map"); opt && opt->count() > 0) {
        config.prompt_map_path = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--temperature"); opt && opt->count() > 0) {
        config.gen.temperature = std::stod(opt->as<std::string>());
    }
    if (auto* opt = cmd->get_option_no_throw("--seed"); opt && opt->count() > 0) {
        config.seed = std::stoull(opt->as<std::string>());
    }
    override_int("--k", config.k_rerank);
    override_int("--concurrency", config.concurrency_limit);
    override_int("--max-tokens", config.gen.max_tokens);
    override_int("--logprob-top-k", config.gen.logprob_top_k);
    config.validate();
    return config;
}

std::unique_ptr<CompletionBackend> make_backend(const BackendFlags& flags,
                                                const RunConfig& config) {
    if (flags.backend_kind == "mock") {
        if (flags.mock_script.empty()) {
            throw ConfigError("--backend mock requires --mock-script");
        }
        auto mock = std::make_unique<MockBackend>();
        auto in = open_input(flags.mock_script);
        load_mock_script(in, *mock);
        return mock;
    }
    if (flags.backend_kind != "http") {
        throw ConfigError("unknown backend \"" + flags.backend_kind + "\"");
    }
    if (config.backend.endpoint_url.empty()) {
        throw ConfigError("http backend requires --endpoint or endpoint_url in the config");
    }
    return std::make_unique<HttpBackend>(config.backend);
}

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--backend", flags.backend_kind,
                    "completion backend: http or mock (default http)");
    cmd->add_option("--mock-script", flags.mock_script, "scripted responses for --backend mock");
    cmd->add_option("--config", flags.config_path, "keyed run-config file; flags override");
    cmd->add_option("--endpoint", "completions endpoint URL");
    cmd->add_option("--model", "model name sent on the wire");
    cmd->add_option("--mode", "reasoning or direct");
    cmd->add_option("--temperature", "sampling temperature");
    cmd->add_option("--max-tokens", "completion token budget");
    cmd->add_option("--logprob-top-k", "logprob alternatives per token (>= 2)");
    cmd->add_option("--concurrency", "bound on in-flight backend requests");
    cmd->add_option("--seed", "seed recorded for deterministic pipelines");
}

PromptTemplate template_from_config(const RunConfig& config) {
    if (config.template_path) {
        auto in = open_input(*config.template_path);
        PromptTemplate tmpl{load_prompt_template(in)};
        tmpl.validate();
        return tmpl;
    }
    return PromptTemplate::standard();
}

std::optional<PromptMap> prompt_map_from_config(const RunConfig& config) {
    if (!config.prompt_map_path) return std::nullopt;
    auto in = open_input(*config.prompt_map_path);
    return load_prompt_map(in);
}

GenParams reasoning_gen(GenParams gen) {
    auto& stops = gen.stop_sequences;
    if (std::find(stops.begin(), stops.end(), kThinkClose) == stops.end()) {
        stops.push_back(kThinkClose);
    }
    return gen;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> parts;
    std::istringstream ss(csv);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

// ---------------------------------------------------------------- index

struct IndexArgs {
    std::string corpus;
    std::string stopwords;
    double k1 = 1.5;
    double b = 0.75;
};

int run_index(const IndexArgs& args) {
    auto corpus = read_corpus(args.corpus);
    std::unordered_set<std::string> stopwords;
    if (!args.stopwords.empty()) stopwords = read_stopwords(args.stopwords);
    auto index = build_index(corpus, Bm25Params{args.k1, args.b}, std::move(stopwords));
    std::size_t postings = 0;
    for (const auto& [term, list] : index.postings) postings += list.size();
    std::cout << "documents " << index.doc_count() << '\n'
              << "avgdl " << index.avgdl << '\n'
              << "vocabulary " << index.postings.size() << '\n'
              << "postings " << postings << '\n';
    return 0;
}

// -------------------------------------------------------------- retrieve

struct RetrieveArgs {
    std::string corpus;
    std::string queries;
    std::string out;
    std::string tag = "bm25";
    std::string stopwords;
    int k = 100;
    double k1 = 1.5;
    double b = 0.75;
};

int run_retrieve(const RetrieveArgs& args) {
    if (args.k < 1) throw ConfigError("--k must be >= 1");
    auto corpus = read_corpus(args.corpus);
    auto queries = read_queries(args.queries);
    std::unordered_set<std::string> stopwords;
    if (!args.stopwords.empty()) stopwords = read_stopwords(args.stopwords);
    auto index = build_index(corpus, Bm25Params{args.k1, args.b}, std::move(stopwords));

    std::vector<RunEntry> all;
    for (const auto& query : queries) {
        for (const auto& c : retrieve(index, query, static_cast<std::size_t>(args.k))) {
            all.push_back(RunEntry{query.id, c.doc_id, c.first_stage_rank, c.score, args.tag});
        }
    }
    auto out = open_output(args.out);
    write_run(all, out);
    std::cout << "wrote " << all.size() << " entries for " << queries.size() << " queries to "
              << args.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- rerank

struct RerankArgs {
    std::string run;
    std::string corpus;
    std::string queries;
    std::string out;
    std::string judgments;
    bool allow_foreign = false;
};

int run_rerank(const RerankArgs& args, const BackendFlags& flags, const CLI::App* cmd) {
    const RunConfig config = effective_config(flags, cmd);
    auto backend = make_backend(flags, config);

    auto first_stage = read_run(args.run, args.allow_foreign);
    auto corpus = index_corpus(read_corpus(args.corpus));
    auto queries = index_queries(read_queries(args.queries));
    auto prompt_map = prompt_map_from_config(config);

    RerankConfig engine;
    engine.k_max = static_cast<std::size_t>(config.k_rerank);
    engine.run_tag = config.run_tag;
    engine.concurrency = config.concurrency_limit;
    engine.mode = config.mode;
    engine.prompt_template = template_from_config(config);
    engine.prompt_map = prompt_map ? &*prompt_map : nullptr;
    engine.gen = config.mode == JudgeMode::reasoning ? reasoning_gen(config.gen) : config.gen;

    // first-appearance order of queries in the run file
    std::vector<std::string> query_order;
    std::map<std::string, std::vector<ScoredCandidate>> candidates;
    for (const auto& e : first_stage) {
        auto [it, inserted] = candidates.try_emplace(e.query_id);
        if (inserted) query_order.push_back(e.query_id);
        it->second.push_back(ScoredCandidate{e.doc_id, e.rank, e.score});
    }
    for (auto& [qid, list] : candidates) {
        std::sort(list.begin(), list.end(),
                  [](const ScoredCandidate& a, const ScoredCandidate& b) {
                      return a.first_stage_rank < b.first_stage_rank;
                  });
        if (list.size() > static_cast<std::size_t>(config.k_rerank)) {
            list.resize(static_cast<std::size_t>(config.k_rerank));
        }
    }

    std::vector<RunEntry> reranked;
    std::vector<ReasoningJudgment> judgments;
    for (const auto& qid : query_order) {
        auto qit = queries.find(qid);
        if (qit == queries.end()) {
            throw ValidationError("query \"" + qid + "\" from the run is not in --queries");
        }
        auto result = rerank(*backend, qit->second, candidates.at(qid), corpus, engine);
        reranked.insert(reranked.end(), result.run.begin(), result.run.end());
        judgments.insert(judgments.end(), result.judgments.begin(), result.judgments.end());
    }

    auto out = open_output(args.out);
    write_run(reranked, out);
    auto sidecar = open_output(args.judgments);
    write_judgments(judgments, sidecar);
    std::size_t failed = 0;
    for (const auto& j : judgments) {
        if (!j.error.empty()) ++failed;
    }
    std::cout << "reranked " << query_order.size() << " queries, " << judgments.size()
              << " judgments (" << failed << " failed) -> " << args.out << '\n';
    return 0;
}

// -------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string run;
    std::string qrels;
    std::string k_list = "10";
    std::string metrics = "ndcg,mrr,judged";
    std::string out;
    std::string run_instructed;
    std::string changed_docs;
    int rel_threshold = 1;
    bool allow_foreign = false;
    bool table = false;
};

std::map<std::string, std::vector<std::string>> read_changed_docs(const std::string& path) {
    auto in = open_input(path);
    std::map<std::string, std::vector<std::string>> changed;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("query_id") ||
            !rec.contains("doc_ids")) {
            throw ParseError(line_no, "expected {\"query_id\":..., \"doc_ids\":[...]}");
        }
        changed[rec["query_id"].get<std::string>()] =
            rec["doc_ids"].get<std::vector<std::string>>();
    }
    return changed;
}

int run_evaluate(const EvaluateArgs& args) {
    auto run = read_run(args.run, args.allow_foreign);
    auto qrels = read_qrels(args.qrels);

    std::vector<int> ks;
    for (const auto& part : split_list(args.k_list)) ks.push_back(std::stoi(part));
    std::set<std::string> names;
    bool want_pmrr = false;
    for (const auto& name : split_list(args.metrics)) {
        if (name == "pmrr" || name == "p-mrr") {
            want_pmrr = true;
        } else {
            names.insert(name);
        }
    }

    MetricReport report;
    if (!names.empty()) {
        report = evaluate(run, qrels, ks, names, args.rel_threshold);
    } else {
        report.k_values = ks;
    }
    if (want_pmrr) {
        if (args.run_instructed.empty() || args.changed_docs.empty()) {
            throw ConfigError("p-mrr needs --run-instructed and --changed-docs");
        }
        auto instructed = read_run(args.run_instructed, args.allow_foreign);
        const double value = p_mrr(group_run(run), group_run(instructed),
                                   read_changed_docs(args.changed_docs));
        report.means["p_mrr"] = value;
        std::cout << "p-MRR (x100): " << value * 100.0 << '\n';
    }

    if (!args.out.empty()) {
        auto out = open_output(args.out);
        write_report_keyed(report, out);
    } else if (!args.table) {
        write_report_keyed(report, std::cout);
    }
    if (args.table) std::cout << format_report_table(report);
    return 0;
}

// ------------------------------------------------------------ paired-eval

struct PairedEvalArgs {
    std::string instances;
};

int run_paired_eval(const PairedEvalArgs& args, const BackendFlags& flags,
                    const CLI::App* cmd) {
    const RunConfig config = effective_config(flags, cmd);
    auto backend = make_backend(flags, config);
    auto in = open_input(args.instances);
    auto instances = load_paired_instances(in);
    auto tmpl = template_from_config(config);
    auto prompt_map = prompt_map_from_config(config);
    const GenParams gen =
        config.mode == JudgeMode::reasoning ? reasoning_gen(config.gen) : config.gen;

    auto scorer = [&](const Query& q, const Document& d) {
        return judge(*backend, q, d, gen, config.mode, tmpl,
                     prompt_map ? &*prompt_map : nullptr)
            .score;
    };
    auto result = pairwise_accuracy(instances, scorer);
    std::cout << "pairwise_accuracy " << result.correct << "/" << result.total << " = "
              << result.accuracy << " (flagged " << result.flagged << ")\n";
    return 0;
}

// ---------------------------------------------------------- distill stages

struct DistillSampleArgs {
    std::string pools;
    std::string mix;
    std::string out;
    std::uint64_t seed = 0;
};

int run_distill_sample(const DistillSampleArgs& args) {
    auto pools_in = open_input(args.pools);
    auto pools = load_pool_entries(pools_in);
    MixSpec spec;
    if (!args.mix.empty()) {
        auto mix_in = open_input(args.mix);
        spec = load_mix_spec(mix_in);
    }
    if (spec.target_total == 0) throw ConfigError("mix spec needs target_total > 0 to sample");
    auto examples = sample_candidates(pools, spec, args.seed);
    auto out = open_output(args.out);
    write_examples(examples, out);
    std::cout << "sampled " << examples.size() << " candidates -> " << args.out << '\n';
    return 0;
}

struct DistillGenerateArgs {
    std::string examples;
    std::string corpus;
    std::string queries;
    std::string journal;
    std::string out;
};

int run_distill_generate(const DistillGenerateArgs& args, const BackendFlags& flags,
                         const CLI::App* cmd) {
    const RunConfig config = effective_config(flags, cmd);
    auto backend = make_backend(flags, config);
    auto examples_in = open_input(args.examples);
    auto examples = load_examples(examples_in);
    auto queries = index_queries(read_queries(args.queries));
    auto corpus = index_corpus(read_corpus(args.corpus));
    auto tmpl = template_from_config(config);

    if (!args.journal.empty() && std::filesystem::exists(args.journal)) {
        auto journal_in = open_input(args.journal);
        const auto resumed = apply_journal(examples, load_journal(journal_in));
        if (resumed > 0) std::cout << "resumed " << resumed << " examples from the journal\n";
    }
    std::ofstream journal_out;
    if (!args.journal.empty()) {
        journal_out.open(args.journal, std::ios::app);
        if (!journal_out) throw ConfigError("cannot open journal \"" + args.journal + "\"");
    }

    auto report = generate_traces(*backend, examples, queries, corpus, config.gen, tmpl,
                                  journal_out.is_open() ? &journal_out : nullptr,
                                  config.concurrency_limit);
    auto out = open_output(args.out);
    write_examples(examples, out);
    std::cout << "generated " << report.generated << ", malformed " << report.malformed
              << ", skipped " << report.skipped << ", teacher_true_rate "
              << report.teacher_true_rate << '\n';
    return 0;
}

struct DistillFilterArgs {
    std::string examples;
    std::string stage;
    std::string out;
    std::string trusted = "official_positive,easy_negative";
    std::string corpus;
    std::string queries;
};

int run_distill_filter(const DistillFilterArgs& args, const BackendFlags& flags,
                       const CLI::App* cmd) {
    auto examples_in = open_input(args.examples);
    auto examples = load_examples(examples_in);

    if (args.stage == "agreement") {
        std::set<Pool> trusted;
        for (const auto& name : split_list(args.trusted)) trusted.insert(pool_from_name(name));
        auto report = agreement_filter(examples, trusted);
        std::cout << "trusted_checked " << report.trusted_checked << '\n'
                  << "trusted_dropped " << report.trusted_dropped << '\n'
                  << "trusted_drop_rate " << report.trusted_drop_rate() << '\n';
        for (const auto& [pool, stats] : report.per_pool) {
            std::cout << "disagreement " << pool_name(pool) << ' ' << stats.disagreed << '/'
                      << stats.checked << " = " << stats.rate() << '\n';
        }
    } else if (args.stage == "self") {
        if (args.corpus.empty() || args.queries.empty()) {
            throw ConfigError("--stage self needs --corpus and --queries");
        }
        const RunConfig config = effective_config(flags, cmd);
        auto backend = make_backend(flags, config);
        auto queries = index_queries(read_queries(args.queries));
        auto corpus = index_corpus(read_corpus(args.corpus));
        auto report = self_filter(*backend, examples, queries, corpus,
                                  reasoning_gen(config.gen), template_from_config(config),
                                  config.concurrency_limit);
        std::cout << "checked " << report.checked << '\n'
                  << "dropped " << report.dropped << '\n'
                  << "flagged " << report.flagged << '\n'
                  << "drop_rate " << report.drop_rate() << '\n';
    } else {
        throw ConfigError("--stage must be agreement or self");
    }
    auto out = open_output(args.out);
    write_examples(examples, out);
    return 0;
}

struct DistillExportArgs {
    std::string examples;
    std::string corpus;
    std::string queries;
    std::string mix;
    std::string out;
    std::string stats_out;
    std::string train_config;
    std::string examples_out;
};

int run_distill_export(const DistillExportArgs& args) {
    auto examples_in = open_input(args.examples);
    auto examples = load_examples(examples_in);
    auto queries = index_queries(read_queries(args.queries));
    auto corpus = index_corpus(read_corpus(args.corpus));

    MixSpec spec;
    if (!args.mix.empty()) {
        auto mix_in = open_input(args.mix);
        spec = load_mix_spec(mix_in);
    }
    auto report = assemble_mix(examples, spec);
    auto out = open_output(args.out);
    export_training(examples, queries, corpus, PromptTemplate::standard(), out);

    std::cout << "kept_positives " << report.kept_positives << '\n'
              << "kept_negatives " << report.kept_negatives << '\n'
              << "teacher_true_rate " << report.teacher_true_rate << '\n';
    for (const auto& [pool, count] : report.kept_per_pool) {
        std::cout << "kept " << pool_name(pool) << ' ' << count << '\n';
    }
    for (const auto& warning : report.warnings) std::cout << "warning " << warning << '\n';

    if (!args.stats_out.empty()) {
        auto stats = chain_length_stats(examples);
        auto stats_out = open_output(args.stats_out);
        write_histogram_csv(stats, stats_out);
        std::cout << "chain_words_mean " << stats.mean << '\n'
                  << "chain_words_median " << stats.median << '\n';
    }
    if (!args.train_config.empty()) {
        auto cfg = open_output(args.train_config);
        write_training_config_template(cfg);
    }
    if (!args.examples_out.empty()) {
        auto ex_out = open_output(args.examples_out);
        write_examples(examples, ex_out);
    }
    return 0;
}

// ------------------------------------------------------------ audit stages

struct AuditFindArgs {
    std::string runs;
    std::string qrels;
    std::string corpus;
    std::string queries;
    std::string out;
    int k = 10;
    int rel_threshold = 2;
    bool allow_foreign = false;
};

int run_audit_find(const AuditFindArgs& args) {
    std::vector<std::vector<RunEntry>> runs;
    for (const auto& path : split_list(args.runs)) {
        runs.push_back(read_run(path, args.allow_foreign));
    }
    auto qrels = read_qrels(args.qrels);
    auto queries = index_queries(read_queries(args.queries));
    auto corpus = index_corpus(read_corpus(args.corpus));
    auto items = find_audit_set(runs, qrels, args.k, args.rel_threshold, queries, corpus);
    auto out = open_output(args.out);
    write_annotation_sheet(items, out);
    std::cout << "audit sheet with " << items.size() << " items -> " << args.out << '\n';
    return 0;
}

struct AuditMergeArgs {
    std::string qrels;
    std::string sheet;
    std::string out;
    std::string changelog;
};

int run_audit_merge(const AuditMergeArgs& args) {
    auto qrels = read_qrels(args.qrels);
    auto sheet_in = open_input(args.sheet);
    auto sheet = read_annotation_sheet(sheet_in);

    std::vector<AnnotationItem> completed;
    std::size_t unannotated = 0;
    for (auto& item : sheet) {
        if (item.proposed_grade) {
            completed.push_back(std::move(item));
        } else {
            ++unannotated;
        }
    }
    auto result = merge_annotations(qrels, completed);
    auto out = open_output(args.out);
    write_qrels(result.fixed, out);
    if (!args.changelog.empty()) {
        auto log = open_output(args.changelog);
        write_change_log(result.log, log);
    }
    std::cout << "merged " << completed.size() << " annotations (" << unannotated
              << " rows left blank) -> " << args.out << '\n';
    return 0;
}

struct AuditDeltaArgs {
    std::string runs;
    std::string qrels_original;
    std::string qrels_fixed;
    std::string out;
    int k = 10;
    bool allow_foreign = false;
};

int run_audit_delta(const AuditDeltaArgs& args) {
    std::vector<std::vector<RunEntry>> runs;
    for (const auto& path : split_list(args.runs)) {
        runs.push_back(read_run(path, args.allow_foreign));
    }
    auto original = read_qrels(args.qrels_original);
    auto fixed = read_qrels(args.qrels_fixed);
    auto deltas = metric_delta(runs, original, fixed, args.k);

    std::ostringstream text;
    text << "run ndcg@" << args.k << "_original ndcg@" << args.k << "_fixed ndcg_delta judged@"
         << args.k << "_original judged@" << args.k << "_fixed judged_delta\n";
    char buf[160];
    for (const auto& d : deltas) {
        std::snprintf(buf, sizeof(buf), "%s %.6f %.6f %+.6f %.6f %.6f %+.6f\n",
                      d.run_tag.c_str(), d.ndcg_original, d.ndcg_fixed, d.ndcg_delta(),
                      d.judged_original, d.judged_fixed, d.judged_delta());
        text << buf;
    }
    if (!args.out.empty()) {
        auto out = open_output(args.out);
        out << text.str();
    }
    std::cout << text.str();
    return 0;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
    std::string in;
    std::string format = "table";
    std::string out;
};

int run_report(const ReportArgs& args) {
    auto in = open_input(args.in);
    auto report = read_report_keyed(in);
    std::ostringstream text;
    if (args.format == "table") {
        text << format_report_table(report);
    } else if (args.format == "csv") {
        write_report_csv(report, text);
    } else {
        throw ConfigError("--format must be table or csv");
    }
    if (!args.out.empty()) {
        auto out = open_output(args.out);
        out << text.str();
    } else {
        std::cout << text.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reasoning-based pointwise reranking pipeline"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "build a BM25 index and print its statistics");
    index_cmd->add_option("--corpus", index_args.corpus, "JSONL corpus")->required();
    index_cmd->add_option("--stopwords", index_args.stopwords, "stopword list, one per line");
    index_cmd->add_option("--k1", index_args.k1, "BM25 k1");
    index_cmd->add_option("--b", index_args.b, "BM25 b");

    RetrieveArgs retrieve_args;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "BM25 top-k retrieval to a TREC run");
    retrieve_cmd->add_option("--corpus", retrieve_args.corpus, "JSONL corpus")->required();
    retrieve_cmd->add_option("--queries", retrieve_args.queries, "JSONL queries")->required();
    retrieve_cmd->add_option("--out", retrieve_args.out, "output run file")->required();
    retrieve_cmd->add_option("--k", retrieve_args.k, "candidates per query");
    retrieve_cmd->add_option("--tag", retrieve_args.tag, "run tag");
    retrieve_cmd->add_option("--stopwords", retrieve_args.stopwords, "stopword list");
    retrieve_cmd->add_option("--k1", retrieve_args.k1, "BM25 k1");
    retrieve_cmd->add_option("--b", retrieve_args.b, "BM25 b");

    RerankArgs rerank_args;
    BackendFlags rerank_backend;
    auto* rerank_cmd = app.add_subcommand("rerank", "rerank a first-stage run with the reasoner");
    rerank_cmd->add_option("--run", rerank_args.run, "first-stage TREC run")->required();
    rerank_cmd->add_option("--corpus", rerank_args.corpus, "JSONL corpus")->required();
    rerank_cmd->add_option("--queries", rerank_args.queries, "JSONL queries")->required();
    rerank_cmd->add_option("--out", rerank_args.out, "reranked run file")->required();
    rerank_cmd->add_option("--judgments", rerank_args.judgments, "judgments JSONL sidecar")
        ->required();
    rerank_cmd->add_flag("--allow-foreign", rerank_args.allow_foreign,
                         "accept runs with rank gaps or nonmonotone scores");
    rerank_cmd->add_option("--k", "rerank depth (default 100)");
    rerank_cmd->add_option("--tag", "run tag for the output");
    rerank_cmd->add_option("--template", "prompt template file");
    rerank_cmd->add_option("--prompt-map", "dataset prompt map (TSV)");
    add_backend_flags(rerank_cmd, rerank_backend);

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a run against qrels");
    evaluate_cmd->add_option("--run", evaluate_args.run, "TREC run file")->required();
    evaluate_cmd->add_option("--qrels", evaluate_args.qrels, "TREC qrels")->required();
    evaluate_cmd->add_option("--k", evaluate_args.k_list, "cutoffs, comma-separated");
    evaluate_cmd->add_option("--metrics", evaluate_args.metrics,
                             "ndcg,mrr,judged,pmrr (comma-separated)");
    evaluate_cmd->add_option("--rel-threshold", evaluate_args.rel_threshold,
                             "grade treated as relevant for mrr");
    evaluate_cmd->add_option("--out", evaluate_args.out, "keyed report file (default stdout)");
    evaluate_cmd->add_option("--run-instructed", evaluate_args.run_instructed,
                             "instructed run for p-mrr");
    evaluate_cmd->add_option("--changed-docs", evaluate_args.changed_docs,
                             "JSONL {query_id, doc_ids} whose relevance the instruction changed");
    evaluate_cmd->add_flag("--allow-foreign", evaluate_args.allow_foreign,
                           "accept runs with rank gaps or nonmonotone scores");
    evaluate_cmd->add_flag("--table", evaluate_args.table, "print an aligned table");

    PairedEvalArgs paired_args;
    BackendFlags paired_backend;
    auto* paired_cmd =
        app.add_subcommand("paired-eval", "pairwise accuracy over contrastive instances");
    paired_cmd->add_option("--instances", paired_args.instances, "paired-instance JSONL")
        ->required();
    paired_cmd->add_option("--template", "prompt template file");
    paired_cmd->add_option("--prompt-map", "dataset prompt map (TSV)");
    add_backend_flags(paired_cmd, paired_backend);

    DistillSampleArgs sample_args;
    auto* sample_cmd =
        app.add_subcommand("distill-sample", "sample (query, passage) pairs from labeled pools");
    sample_cmd->add_option("--pools", sample_args.pools, "pool entries JSONL")->required();
    sample_cmd->add_option("--mix", sample_args.mix, "mix spec file")->required();
    sample_cmd->add_option("--out", sample_args.out, "sampled examples JSONL")->required();
    sample_cmd->add_option("--seed", sample_args.seed, "sampling seed");

    DistillGenerateArgs generate_args;
    BackendFlags generate_backend;
    auto* generate_cmd =
        app.add_subcommand("distill-generate", "harvest teacher reasoning traces");
    generate_cmd->add_option("--examples", generate_args.examples, "examples JSONL")->required();
    generate_cmd->add_option("--corpus", generate_args.corpus, "JSONL corpus")->required();
    generate_cmd->add_option("--queries", generate_args.queries, "JSONL queries")->required();
    generate_cmd->add_option("--journal", generate_args.journal,
                             "append-only journal for resumable batches");
    generate_cmd->add_option("--out", generate_args.out, "updated examples JSONL")->required();
    generate_cmd->add_option("--template", "prompt template file");
    add_backend_flags(generate_cmd, generate_backend);

    DistillFilterArgs filter_args;
    BackendFlags filter_backend;
    auto* filter_cmd =
        app.add_subcommand("distill-filter", "apply the agreement or self filter");
    filter_cmd->add_option("--examples", filter_args.examples, "examples JSONL")->required();
    filter_cmd->add_option("--stage", filter_args.stage, "agreement or self")->required();
    filter_cmd->add_option("--out", filter_args.out, "updated examples JSONL")->required();
    filter_cmd->add_option("--trusted-pools", filter_args.trusted,
                           "comma-separated pools for the agreement filter");
    filter_cmd->add_option("--corpus", filter_args.corpus, "JSONL corpus (self stage)");
    filter_cmd->add_option("--queries", filter_args.queries, "JSONL queries (self stage)");
    filter_cmd->add_option("--template", "prompt template file");
    add_backend_flags(filter_cmd, filter_backend);

    DistillExportArgs export_args;
    auto* export_cmd =
        app.add_subcommand("distill-export", "assemble the final mix and export training data");
    export_cmd->add_option("--examples", export_args.examples, "examples JSONL")->required();
    export_cmd->add_option("--corpus", export_args.corpus, "JSONL corpus")->required();
    export_cmd->add_option("--queries", export_args.queries, "JSONL queries")->required();
    export_cmd->add_option("--out", export_args.out, "training JSONL")->required();
    export_cmd->add_option("--mix", export_args.mix, "mix spec file (omit to take all)");
    export_cmd->add_option("--stats-out", export_args.stats_out, "chain-length histogram CSV");
    export_cmd->add_option("--train-config", export_args.train_config,
                           "write a fine-tuning config template");
    export_cmd->add_option("--examples-out", export_args.examples_out,
                           "write back examples with kept marks");

    AuditFindArgs find_args;
    auto* find_cmd =
        app.add_subcommand("audit-find", "surface unjudged/suspect top-k docs across runs");
    find_cmd->add_option("--runs", find_args.runs, "comma-separated run files")->required();
    find_cmd->add_option("--qrels", find_args.qrels, "TREC qrels")->required();
    find_cmd->add_option("--corpus", find_args.corpus, "JSONL corpus")->required();
    find_cmd->add_option("--queries", find_args.queries, "JSONL queries")->required();
    find_cmd->add_option("--out", find_args.out, "annotation sheet CSV")->required();
    find_cmd->add_option("--k", find_args.k, "audit depth");
    find_cmd->add_option("--rel-threshold", find_args.rel_threshold,
                         "grade counted as already-relevant");
    find_cmd->add_flag("--allow-foreign", find_args.allow_foreign,
                       "accept runs with rank gaps or nonmonotone scores");

    AuditMergeArgs merge_args;
    auto* merge_cmd =
        app.add_subcommand("audit-merge", "merge completed annotations into fixed qrels");
    merge_cmd->add_option("--qrels", merge_args.qrels, "original qrels")->required();
    merge_cmd->add_option("--sheet", merge_args.sheet, "completed annotation sheet")->required();
    merge_cmd->add_option("--out", merge_args.out, "fixed qrels")->required();
    merge_cmd->add_option("--changelog", merge_args.changelog, "change log file");

    AuditDeltaArgs delta_args;
    auto* delta_cmd =
        app.add_subcommand("audit-delta", "metric deltas between original and fixed qrels");
    delta_cmd->add_option("--runs", delta_args.runs, "comma-separated run files")->required();
    delta_cmd->add_option("--qrels-original", delta_args.qrels_original, "original qrels")
        ->required();
    delta_cmd->add_option("--qrels-fixed", delta_args.qrels_fixed, "fixed qrels")->required();
    delta_cmd->add_option("--k", delta_args.k, "cutoff");
    delta_cmd->add_option("--out", delta_args.out, "delta report file");
    delta_cmd->add_flag("--allow-foreign", delta_args.allow_foreign,
                        "accept runs with rank gaps or nonmonotone scores");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "render a keyed metric report");
    report_cmd->add_option("--in", report_args.in, "keyed report file")->required();
    report_cmd->add_option("--format", report_args.format, "table or csv");
    report_cmd->add_option("--out", report_args.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*index_cmd) return run_index(index_args);
        if (*retrieve_cmd) return run_retrieve(retrieve_args);
        if (*rerank_cmd) return run_rerank(rerank_args, rerank_backend, rerank_cmd);
        if (*evaluate_cmd) return run_evaluate(evaluate_args);
        if (*paired_cmd) return run_paired_eval(paired_args, paired_backend, paired_cmd);
        if (*sample_cmd) return run_distill_sample(sample_args);
        if (*generate_cmd) return run_distill_generate(generate_args, generate_backend,
                                                       generate_cmd);
        if (*filter_cmd) return run_distill_filter(filter_args, filter_backend, filter_cmd);
        if (*export_cmd) return run_distill_export(export_args);
        if (*find_cmd) return run_audit_find(find_args);
        if (*merge_cmd) return run_audit_merge(merge_args);
        if (*delta_cmd) return run_audit_delta(delta_args);
        if (*report_cmd) return run_report(report_args);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const CapabilityError& e) {
        std::cerr << "backend capability error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
