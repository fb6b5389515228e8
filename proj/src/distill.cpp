#include "thinkrank/distill.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace thinkrank {

namespace {

using nlohmann::json;

constexpr const char* kPoolNames[kPoolCount] = {
    "official_positive",
    "easy_negative",
    "hard_negative_1_5",
    "hard_negative_5_10",
};

constexpr const char* kStatusNames[] = {
    "pending",
    "generated",
    "dropped_agreement",
    "dropped_self_filter",
    "dropped_malformed",
    "kept",
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Deterministic in-range draw; std::uniform_int_distribution is
// implementation-defined, so roll our own for reproducible sampling.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    return rng() % bound;
}

std::string strip_trailing_punct(std::string token) {
    while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) {
        token.pop_back();
    }
    return token;
}

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::size_t count_words(const std::string& text) {
    std::istringstream ss(text);
    std::string word;
    std::size_t n = 0;
    while (ss >> word) ++n;
    return n;
}

const Query& lookup_query(const std::map<std::string, Query>& queries, const std::string& id) {
    auto it = queries.find(id);
    if (it == queries.end()) throw ValidationError("unknown query id \"" + id + "\"");
    return it->second;
}

const Document& lookup_doc(const std::map<std::string, Document>& docs, const std::string& id) {
    auto it = docs.find(id);
    if (it == docs.end()) throw ValidationError("unknown doc id \"" + id + "\"");
    return it->second;
}

json example_to_json(const DistillExample& e) {
    json rec = {
        {"query_id", e.query_id},
        {"doc_id", e.doc_id},
        {"pool", pool_name(e.pool)},
        {"implied_label", e.implied_label},
        {"status", status_name(e.status)},
        {"chain", e.chain},
    };
    if (e.teacher_prediction) rec["teacher_prediction"] = *e.teacher_prediction;
    if (e.self_prediction) rec["self_prediction"] = *e.self_prediction;
    return rec;
}

DistillExample example_from_json(const json& rec, std::size_t line_no) {
    if (!rec.is_object()) throw ParseError(line_no, "not a JSON object");
    DistillExample e;
    try {
        e.query_id = rec.at("query_id").get<std::string>();
        e.doc_id = rec.at("doc_id").get<std::string>();
        e.pool = pool_from_name(rec.at("pool").get<std::string>());
        e.implied_label = rec.at("implied_label").get<bool>();
        e.status = status_from_name(rec.value("status", "pending"));
        e.chain = rec.value("chain", std::string{});
        if (rec.contains("teacher_prediction") && rec["teacher_prediction"].is_boolean()) {
            e.teacher_prediction = rec["teacher_prediction"].get<bool>();
        }
        if (rec.contains("self_prediction") && rec["self_prediction"].is_boolean()) {
            e.self_prediction = rec["self_prediction"].get<bool>();
        }
    } catch (const json::exception& ex) {
        throw ParseError(line_no, ex.what());
    }
    return e;
}

double percentile_nearest_rank(const std::vector<std::size_t>& sorted, int p) {
    const auto n = sorted.size();
    const auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(p) / 100.0 * static_cast<double>(n)));
    return static_cast<double>(sorted[std::max<std::size_t>(rank, 1) - 1]);
}

} // namespace

const char* pool_name(Pool pool) {
    return kPoolNames[static_cast<std::size_t>(pool)];
}

Pool pool_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kPoolCount; ++i) {
        if (name == kPoolNames[i]) return static_cast<Pool>(i);
    }
    throw ParseError("unknown pool \"" + name + "\"");
}

const char* status_name(ExampleStatus status) {
    return kStatusNames[static_cast<std::size_t>(status)];
}

ExampleStatus status_from_name(const std::string& name) {
    for (std::size_t i = 0; i < std::size(kStatusNames); ++i) {
        if (name == kStatusNames[i]) return static_cast<ExampleStatus>(i);
    }
    throw ParseError("unknown status \"" + name + "\"");
}

void MixSpec::validate() const {
    double sum = 0.0;
    for (double p : proportions) {
        if (p < 0.0) throw ValidationError("mix proportions must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("mix proportions must sum to 1, got " + std::to_string(sum));
    }
    for (Pool p : negative_sources) {
        if (p == positive_source) {
            throw ValidationError("pool " + std::string(pool_name(p)) +
                                  " cannot be both positive and negative source");
        }
    }
}

MixSpec load_mix_spec(std::istream& in) {
    MixSpec spec;
    spec.negative_sources.clear();
    bool saw_negatives = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "proportion") {
            std::string pool;
            double value = 0.0;
            ss >> pool >> value;
            if (ss.fail()) throw ParseError(line_no, "expected: proportion <pool> <value>");
            spec.proportions[static_cast<std::size_t>(pool_from_name(pool))] = value;
        } else if (key == "target_total") {
            ss >> spec.target_total;
            if (ss.fail()) throw ParseError(line_no, "expected: target_total <count>");
        } else if (key == "positive_source") {
            std::string pool;
            ss >> pool;
            spec.positive_source = pool_from_name(pool);
        } else if (key == "negative_sources") {
            std::string pool;
            saw_negatives = true;
            while (ss >> pool) spec.negative_sources.push_back(pool_from_name(pool));
        } else {
            throw ParseError(line_no, "unknown mix key \"" + key + "\"");
        }
    }
    if (!saw_negatives) {
        spec.negative_sources = {Pool::easy_negative, Pool::hard_negative_1_5,
                                 Pool::hard_negative_5_10};
    }
    spec.validate();
    return spec;
}

std::map<Pool, std::vector<PoolEntry>> load_pool_entries(std::istream& in) {
    std::map<Pool, std::vector<PoolEntry>> pools;
    std::map<Pool, std::set<std::pair<std::string, std::string>>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(line_no, "not a JSON object");
        }
        try {
            const Pool pool = pool_from_name(rec.at("pool").get<std::string>());
            PoolEntry entry{rec.at("query_id").get<std::string>(),
                            rec.at("doc_id").get<std::string>(),
                            rec.at("implied_label").get<bool>()};
            // Concatenated generation rounds may repeat a pair; first wins.
            if (seen[pool].insert({entry.query_id, entry.doc_id}).second) {
                pools[pool].push_back(std::move(entry));
            }
        } catch (const json::exception& ex) {
            throw ParseError(line_no, ex.what());
        }
    }
    return pools;
}

std::array<std::size_t, kPoolCount> apportion(const std::array<double, kPoolCount>& proportions,
                                              std::size_t total) {
    std::array<std::size_t, kPoolCount> quotas{};
    std::array<double, kPoolCount> remainders{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < kPoolCount; ++i) {
        const double exact = proportions[i] * static_cast<double>(total);
        quotas[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - std::floor(exact);
        assigned += quotas[i];
    }
    std::array<std::size_t, kPoolCount> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < total; ++i) {
        ++quotas[order[i % kPoolCount]];
        ++assigned;
    }
    return quotas;
}

std::vector<DistillExample> sample_candidates(const std::map<Pool, std::vector<PoolEntry>>& pools,
                                              const MixSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto quotas = apportion(spec.proportions, spec.target_total);

    std::vector<DistillExample> out;
    out.reserve(spec.target_total);
    for (std::size_t i = 0; i < kPoolCount; ++i) {
        const auto pool = static_cast<Pool>(i);
        const std::size_t quota = quotas[i];
        if (quota == 0) continue;
        auto it = pools.find(pool);
        const std::size_t available = it == pools.end() ? 0 : it->second.size();
        if (available < quota) {
            throw ValidationError("pool " + std::string(pool_name(pool)) + " holds " +
                                  std::to_string(available) + " entries, quota is " +
                                  std::to_string(quota) + " (short by " +
                                  std::to_string(quota - available) + ")");
        }
        // Partial Fisher-Yates over index space, one RNG stream per pool.
        std::mt19937_64 rng(seed ^ ((i + 1) * 0x9E3779B97F4A7C15ULL));
        std::vector<std::size_t> indices(available);
        std::iota(indices.begin(), indices.end(), 0);
        for (std::size_t j = 0; j < quota; ++j) {
            const auto pick = j + bounded_draw(rng, available - j);
            std::swap(indices[j], indices[pick]);
        }
        for (std::size_t j = 0; j < quota; ++j) {
            const PoolEntry& entry = it->second[indices[j]];
            DistillExample e;
            e.query_id = entry.query_id;
            e.doc_id = entry.doc_id;
            e.pool = pool;
            e.implied_label = entry.implied_label;
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::optional<bool> parse_teacher_verdict(std::string_view completion_text) {
    const std::string text(completion_text);
    const auto marker = text.rfind(kThinkClose);
    if (marker != std::string::npos) {
        std::istringstream tail(text.substr(marker + std::string(kThinkClose).size()));
        std::string token;
        if (!(tail >> token)) return std::nullopt;
        token = strip_trailing_punct(lowercase(token));
        if (token == "true") return true;
        if (token == "false") return false;
        return std::nullopt;
    }
    // No closing marker: look at the trailing 20 characters for exactly one
    // of the two verdict words.
    const std::size_t start = text.size() > 20 ? text.size() - 20 : 0;
    const std::string tail = lowercase(text.substr(start));
    const bool has_true = tail.find("true") != std::string::npos;
    const bool has_false = tail.find("false") != std::string::npos;
    if (has_true == has_false) return std::nullopt;
    return has_true;
}

void append_journal(std::ostream& out, const JournalRecord& record) {
    json rec = {
        {"query_id", record.query_id},
        {"doc_id", record.doc_id},
        {"pool", pool_name(record.pool)},
        {"status", status_name(record.status)},
        {"chain", record.chain},
        {"ts", record.timestamp.empty() ? utc_timestamp() : record.timestamp},
    };
    if (record.teacher_prediction) rec["teacher_prediction"] = *record.teacher_prediction;
    if (record.self_prediction) rec["self_prediction"] = *record.self_prediction;
    out << rec.dump() << '\n';
    out.flush();
}

std::vector<JournalRecord> load_journal(std::istream& in) {
    std::vector<JournalRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(line_no, "not a JSON object");
        }
        JournalRecord r;
        try {
            r.query_id = rec.at("query_id").get<std::string>();
            r.doc_id = rec.at("doc_id").get<std::string>();
            r.pool = pool_from_name(rec.at("pool").get<std::string>());
            r.status = status_from_name(rec.at("status").get<std::string>());
            r.chain = rec.value("chain", std::string{});
            r.timestamp = rec.value("ts", std::string{});
            if (rec.contains("teacher_prediction") && rec["teacher_prediction"].is_boolean()) {
                r.teacher_prediction = rec["teacher_prediction"].get<bool>();
            }
            if (rec.contains("self_prediction") && rec["self_prediction"].is_boolean()) {
                r.self_prediction = rec["self_prediction"].get<bool>();
            }
        } catch (const json::exception& ex) {
            throw ParseError(line_no, ex.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::size_t apply_journal(std::vector<DistillExample>& examples,
                          std::span<const JournalRecord> records) {
    std::map<std::tuple<std::string, std::string, Pool>, std::size_t> index;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        index[{examples[i].query_id, examples[i].doc_id, examples[i].pool}] = i;
    }
    std::size_t applied = 0;
    for (const auto& r : records) {
        auto it = index.find({r.query_id, r.doc_id, r.pool});
        if (it == index.end()) continue;
        DistillExample& e = examples[it->second];
        const bool forward =
            (e.status == ExampleStatus::pending && r.status != ExampleStatus::pending) ||
            (e.status == ExampleStatus::generated && r.status != ExampleStatus::pending &&
             r.status != ExampleStatus::generated);
        if (!forward) continue;
        e.status = r.status;
        if (!r.chain.empty()) e.chain = r.chain;
        if (r.teacher_prediction) e.teacher_prediction = r.teacher_prediction;
        if (r.self_prediction) e.self_prediction = r.self_prediction;
        ++applied;
    }
    return applied;
}

GenerateReport generate_traces(CompletionBackend& backend, std::vector<DistillExample>& examples,
                               const std::map<std::string, Query>& queries,
                               const std::map<std::string, Document>& docs,
                               const GenParams& params, const PromptTemplate& tmpl,
                               std::ostream* journal, int concurrency) {
    params.validate();
    tmpl.validate();

    GenerateReport report;
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].status == ExampleStatus::pending) {
            pending.push_back(i);
        } else {
            ++report.skipped;
        }
    }

    std::mutex journal_mutex;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> fatal(std::max<std::size_t>(pending.size(), 1));

    auto worker = [&] {
        for (std::size_t w = next.fetch_add(1); w < pending.size(); w = next.fetch_add(1)) {
            DistillExample& e = examples[pending[w]];
            try {
                const Query& query = lookup_query(queries, e.query_id);
                const Document& doc = lookup_doc(docs, e.doc_id);
                const std::string prompt = assemble_prompt(tmpl, query, doc);
                const Completion completion = backend.complete(prompt, params);

                const auto verdict = parse_teacher_verdict(completion.text);
                std::string chain = completion.text;
                if (auto pos = chain.rfind(kThinkClose); pos != std::string::npos) {
                    chain.resize(pos);
                }
                if (verdict) {
                    e.chain = std::move(chain);
                    e.teacher_prediction = verdict;
                    e.status = ExampleStatus::generated;
                } else {
                    e.chain = std::move(chain);
                    e.status = ExampleStatus::dropped_malformed;
                }
                if (journal) {
                    std::lock_guard<std::mutex> lock(journal_mutex);
                    append_journal(*journal, JournalRecord{e.query_id, e.doc_id, e.pool, e.status,
                                                           e.teacher_prediction,
                                                           e.self_prediction, e.chain, {}});
                }
            } catch (...) {
                fatal[w] = std::current_exception();
                return;
            }
        }
    };

    const std::size_t thread_count = std::min<std::size_t>(std::max(concurrency, 1),
                                                           std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (const auto& e : fatal) {
        if (e) std::rethrow_exception(e);
    }

    for (auto idx : pending) {
        if (examples[idx].status == ExampleStatus::generated) ++report.generated;
        if (examples[idx].status == ExampleStatus::dropped_malformed) ++report.malformed;
    }
    std::size_t generated_true = 0;
    std::size_t with_prediction = 0;
    for (const auto& e : examples) {
        if (e.teacher_prediction) {
            ++with_prediction;
            if (*e.teacher_prediction) ++generated_true;
        }
    }
    if (with_prediction > 0) {
        report.teacher_true_rate =
            static_cast<double>(generated_true) / static_cast<double>(with_prediction);
    }
    return report;
}

AgreementReport agreement_filter(std::vector<DistillExample>& examples,
                                 const std::set<Pool>& trusted_pools) {
    AgreementReport report;
    for (auto& e : examples) {
        if (e.status != ExampleStatus::generated || !e.teacher_prediction) continue;
        auto& pool_stats = report.per_pool[e.pool];
        ++pool_stats.checked;
        const bool disagreed = *e.teacher_prediction != e.implied_label;
        if (disagreed) ++pool_stats.disagreed;
        if (trusted_pools.count(e.pool)) {
            ++report.trusted_checked;
            if (disagreed) {
                e.status = ExampleStatus::dropped_agreement;
                ++report.trusted_dropped;
            }
        }
    }
    return report;
}

SelfFilterReport self_filter(CompletionBackend& scorer, std::vector<DistillExample>& examples,
                             const std::map<std::string, Query>& queries,
                             const std::map<std::string, Document>& docs, const GenParams& params,
                             const PromptTemplate& tmpl, int concurrency) {
    params.validate();
    tmpl.validate();

    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].status == ExampleStatus::generated && examples[i].teacher_prediction) {
            targets.push_back(i);
        }
    }

    SelfFilterReport report;
    report.checked = targets.size();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> dropped{0};
    std::atomic<std::size_t> flagged{0};

    auto worker = [&] {
        for (std::size_t w = next.fetch_add(1); w < targets.size(); w = next.fetch_add(1)) {
            DistillExample& e = examples[targets[w]];
            try {
                const Query& query = lookup_query(queries, e.query_id);
                const Document& doc = lookup_doc(docs, e.doc_id);
                const ReasoningJudgment j =
                    judge(scorer, query, doc, params, JudgeMode::reasoning, tmpl);
                e.self_prediction = j.prediction;
                if (j.prediction != *e.teacher_prediction) {
                    e.status = ExampleStatus::dropped_self_filter;
                    dropped.fetch_add(1);
                }
            } catch (const Error&) {
                flagged.fetch_add(1);  // advisory filter: keep the example
            }
        }
    };

    const std::size_t thread_count = std::min<std::size_t>(std::max(concurrency, 1),
                                                           std::max<std::size_t>(targets.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    report.dropped = dropped.load();
    report.flagged = flagged.load();
    return report;
}

MixReport assemble_mix(std::vector<DistillExample>& examples, const MixSpec& spec) {
    spec.validate();
    MixReport report;

    std::size_t generated_true = 0;
    std::size_t with_prediction = 0;
    for (const auto& e : examples) {
        if (e.teacher_prediction) {
            ++with_prediction;
            if (*e.teacher_prediction) ++generated_true;
        }
    }
    if (with_prediction > 0) {
        report.teacher_true_rate =
            static_cast<double>(generated_true) / static_cast<double>(with_prediction);
    }

    const std::set<Pool> negative_set(spec.negative_sources.begin(), spec.negative_sources.end());
    std::array<std::size_t, kPoolCount> quotas{};
    bool limited = spec.target_total > 0;
    if (limited) quotas = apportion(spec.proportions, spec.target_total);

    std::array<std::size_t, kPoolCount> taken{};
    for (auto& e : examples) {
        if (e.status != ExampleStatus::generated || !e.teacher_prediction) continue;
        const bool positive = e.pool == spec.positive_source && *e.teacher_prediction;
        const bool negative = negative_set.count(e.pool) && !*e.teacher_prediction;
        if (!positive && !negative) continue;
        const auto idx = static_cast<std::size_t>(e.pool);
        if (limited && taken[idx] >= quotas[idx]) continue;
        ++taken[idx];
        e.status = ExampleStatus::kept;
        ++report.kept_per_pool[e.pool];
        if (positive) {
            ++report.kept_positives;
        } else {
            ++report.kept_negatives;
        }
    }
    if (limited) {
        for (std::size_t i = 0; i < kPoolCount; ++i) {
            if (taken[i] < quotas[i]) {
                report.warnings.push_back("pool " + std::string(pool_name(static_cast<Pool>(i))) +
                                          " short: wanted " + std::to_string(quotas[i]) +
                                          ", took " + std::to_string(taken[i]));
            }
        }
    }
    if (report.kept_negatives == 0) {
        report.warnings.push_back("no negatives survived filtering");
    }
    if (report.kept_positives == 0) {
        report.warnings.push_back("no positives survived filtering");
    }
    return report;
}

void export_training(std::span<const DistillExample> examples,
                     const std::map<std::string, Query>& queries,
                     const std::map<std::string, Document>& docs, const PromptTemplate& tmpl,
                     std::ostream& out) {
    tmpl.validate();
    for (const auto& e : examples) {
        if (e.status != ExampleStatus::kept) continue;
        if (!e.teacher_prediction) {
            throw ValidationError("kept example (" + e.query_id + ", " + e.doc_id +
                                  ") lacks a teacher prediction");
        }
        const std::string prompt =
            assemble_prompt(tmpl, lookup_query(queries, e.query_id), lookup_doc(docs, e.doc_id));
        json rec = {
            {"prompt", prompt},
            {"completion",
             e.chain + kThinkClose + std::string(" ") + (*e.teacher_prediction ? "true" : "false")},
            {"label", *e.teacher_prediction},
            {"pool", pool_name(e.pool)},
        };
        out << rec.dump() << '\n';
    }
}

std::vector<TrainingRecord> load_training(std::istream& in) {
    std::vector<TrainingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(line_no, "not a JSON object");
        }
        TrainingRecord r;
        try {
            r.prompt = rec.at("prompt").get<std::string>();
            r.completion = rec.at("completion").get<std::string>();
            r.label = rec.at("label").get<bool>();
            r.pool = pool_from_name(rec.at("pool").get<std::string>());
        } catch (const json::exception& ex) {
            throw ParseError(line_no, ex.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

ChainLengthStats chain_length_stats(std::span<const DistillExample> examples,
                                    std::size_t bin_width) {
    if (bin_width == 0) throw ValidationError("chain_length_stats: bin_width must be >= 1");
    ChainLengthStats stats;
    stats.bin_width = bin_width;

    std::vector<std::size_t> lengths;
    for (const auto& e : examples) {
        if (!e.chain.empty()) lengths.push_back(count_words(e.chain));
    }
    stats.count = lengths.size();
    if (lengths.empty()) return stats;

    std::sort(lengths.begin(), lengths.end());
    stats.mean = static_cast<double>(std::accumulate(lengths.begin(), lengths.end(),
                                                     std::uint64_t{0})) /
                 static_cast<double>(lengths.size());
    const std::size_t mid = lengths.size() / 2;
    stats.median = lengths.size() % 2 == 1
                       ? static_cast<double>(lengths[mid])
                       : (static_cast<double>(lengths[mid - 1]) +
                          static_cast<double>(lengths[mid])) / 2.0;
    for (int p : {25, 50, 75, 90, 95, 99}) {
        stats.percentiles[p] = percentile_nearest_rank(lengths, p);
    }

    std::map<std::size_t, std::size_t> bin_counts;
    for (auto len : lengths) ++bin_counts[len / bin_width * bin_width];
    stats.bins.assign(bin_counts.begin(), bin_counts.end());
    return stats;
}

void write_histogram_csv(const ChainLengthStats& stats, std::ostream& out) {
    out << "bin_lo,bin_hi,count\n";
    for (const auto& [lo, count] : stats.bins) {
        out << lo << ',' << lo + stats.bin_width - 1 << ',' << count << '\n';
    }
}

void write_examples(std::span<const DistillExample> examples, std::ostream& out) {
    for (const auto& e : examples) {
        out << example_to_json(e).dump() << '\n';
    }
}

std::vector<DistillExample> load_examples(std::istream& in) {
    std::vector<DistillExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw ParseError(line_no, "bad JSON");
        out.push_back(example_from_json(rec, line_no));
    }
    return out;
}

void write_training_config_template(std::ostream& out) {
    out << "# Fine-tuning configuration template. This artifact exports training\n"
           "# data only; run the actual tuning with your trainer of choice.\n"
           "adapter lora\n"
           "lora_rank 32\n"
           "lora_alpha 64\n"
           "learning_rate 1e-4\n"
           "effective_batch_size 128\n"
           "max_epochs 2\n"
           "train_file train.jsonl\n";
}

} // namespace thinkrank
