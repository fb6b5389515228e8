#include "thinkrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace thinkrank {

namespace {

double discount(std::size_t position_1based) {
    return std::log2(static_cast<double>(position_1based) + 1.0);
}

int grade_of(const QueryQrels& qrels, const std::string& doc_id) {
    auto it = qrels.find(doc_id);
    return it == qrels.end() ? 0 : it->second;
}

// rank of doc in a run sorted by rank; absent -> run length + 1
std::size_t rank_or_bottom(const std::vector<RunEntry>& run, const std::string& doc_id) {
    for (const auto& e : run) {
        if (e.doc_id == doc_id) return static_cast<std::size_t>(e.rank);
    }
    return run.size() + 1;
}

std::string metric_key(const std::string& name, int k) {
    return name + "@" + std::to_string(k);
}

} // namespace

std::optional<double> ndcg_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k) {
    if (k < 1) throw ValidationError("ndcg_at_k: k must be >= 1");

    std::vector<int> judged_grades;
    judged_grades.reserve(qrels.size());
    for (const auto& [doc, grade] : qrels) judged_grades.push_back(grade);
    std::sort(judged_grades.begin(), judged_grades.end(), std::greater<>());

    double idcg = 0.0;
    const std::size_t ideal_n = std::min<std::size_t>(k, judged_grades.size());
    for (std::size_t i = 0; i < ideal_n; ++i) {
        idcg += judged_grades[i] / discount(i + 1);
    }
    if (idcg == 0.0) return std::nullopt;  // no relevant docs; excluded upstream

    double dcg = 0.0;
    const std::size_t n = std::min<std::size_t>(k, run.size());
    for (std::size_t i = 0; i < n; ++i) {
        dcg += grade_of(qrels, run[i].doc_id) / discount(i + 1);
    }
    return dcg / idcg;
}

double mrr_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k,
                int rel_threshold) {
    if (rel_threshold < 1) throw ValidationError("mrr_at_k: rel_threshold must be >= 1");
    const std::size_t n = std::min<std::size_t>(k, run.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (binarize(grade_of(qrels, run[i].doc_id), rel_threshold)) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double judged_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k) {
    if (k < 1) throw ValidationError("judged_at_k: k must be >= 1");
    const std::size_t n = std::min<std::size_t>(k, run.size());
    if (n == 0) return 0.0;
    std::size_t judged = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (qrels.count(run[i].doc_id)) ++judged;
    }
    return static_cast<double>(judged) / static_cast<double>(n);
}

double p_mrr(const std::map<std::string, std::vector<RunEntry>>& run_original,
             const std::map<std::string, std::vector<RunEntry>>& run_instructed,
             const std::map<std::string, std::vector<std::string>>& changed_docs) {
    double query_sum = 0.0;
    std::size_t query_count = 0;
    for (const auto& [qid, docs] : changed_docs) {
        if (docs.empty()) continue;
        auto og_it = run_original.find(qid);
        auto new_it = run_instructed.find(qid);
        if (og_it == run_original.end() || new_it == run_instructed.end()) {
            throw ValidationError("p_mrr: query " + qid + " missing from a run");
        }
        double doc_sum = 0.0;
        for (const auto& doc : docs) {
            const double r_og = static_cast<double>(rank_or_bottom(og_it->second, doc));
            const double r_new = static_cast<double>(rank_or_bottom(new_it->second, doc));
            doc_sum += r_new < r_og ? r_og / r_new - 1.0 : 1.0 - r_new / r_og;
        }
        query_sum += doc_sum / static_cast<double>(docs.size());
        ++query_count;
    }
    return query_count == 0 ? 0.0 : query_sum / static_cast<double>(query_count);
}

PairwiseResult pairwise_accuracy(std::span<const PairedInstance> instances,
                                 const PairScorer& scorer) {
    if (instances.empty()) throw ValidationError("pairwise_accuracy: no instances");
    PairwiseResult result;
    result.total = instances.size();
    for (const auto& inst : instances) {
        try {
            const double aa = scorer(inst.query_a, inst.doc_a);
            const double ab = scorer(inst.query_a, inst.doc_b);
            const double bb = scorer(inst.query_b, inst.doc_b);
            const double ba = scorer(inst.query_b, inst.doc_a);
            if (aa > ab && bb > ba) ++result.correct;
        } catch (const Error&) {
            ++result.flagged;
        }
    }
    result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

MetricReport evaluate(std::span<const RunEntry> run, std::span<const QrelEntry> qrels,
                      const std::vector<int>& k_values,
                      const std::set<std::string>& metric_names, int rel_threshold) {
    for (const auto& name : metric_names) {
        if (name != "ndcg" && name != "mrr" && name != "judged") {
            throw ConfigError("unknown metric \"" + name + "\"");
        }
    }
    const auto by_query = group_run(run);
    const auto qrel_map = group_qrels(qrels);
    static const QueryQrels no_judgments{};

    MetricReport report;
    report.k_values = k_values;
    report.query_count = by_query.size();

    std::map<std::string, std::pair<double, std::size_t>> sums;  // metric -> (sum, count)
    for (const auto& [qid, entries] : by_query) {
        auto qr_it = qrel_map.find(qid);
        const QueryQrels& qr = qr_it == qrel_map.end() ? no_judgments : qr_it->second;
        const bool has_relevant =
            std::any_of(qr.begin(), qr.end(), [](const auto& g) { return g.second > 0; });
        for (int k : k_values) {
            if (metric_names.count("ndcg")) {
                const auto key = metric_key("ndcg", k);
                if (auto v = ndcg_at_k(entries, qr, k)) {
                    report.per_query[qid][key] = *v;
                    sums[key].first += *v;
                    sums[key].second += 1;
                } else {
                    report.excluded[key] += 1;
                }
            }
            if (metric_names.count("mrr")) {
                const auto key = metric_key("mrr", k);
                if (has_relevant) {
                    const double v = mrr_at_k(entries, qr, k, rel_threshold);
                    report.per_query[qid][key] = v;
                    sums[key].first += v;
                    sums[key].second += 1;
                } else {
                    report.excluded[key] += 1;
                }
            }
            if (metric_names.count("judged")) {
                const auto key = metric_key("judged", k);
                const double v = judged_at_k(entries, qr, k);
                report.per_query[qid][key] = v;
                sums[key].first += v;
                sums[key].second += 1;
            }
        }
    }
    for (const auto& [key, sc] : sums) {
        if (sc.second > 0) report.means[key] = sc.first / static_cast<double>(sc.second);
    }
    return report;
}

void write_report_keyed(const MetricReport& report, std::ostream& out) {
    char buf[64];
    out << "queries " << report.query_count << '\n';
    for (const auto& [key, count] : report.excluded) {
        out << "excluded " << key << ' ' << count << '\n';
    }
    for (const auto& [key, value] : report.means) {
        std::snprintf(buf, sizeof(buf), "%.6f", value);
        out << "mean " << key << ' ' << buf << '\n';
    }
    for (const auto& [qid, metrics] : report.per_query) {
        for (const auto& [key, value] : metrics) {
            std::snprintf(buf, sizeof(buf), "%.6f", value);
            out << "query " << qid << ' ' << key << ' ' << buf << '\n';
        }
    }
}

MetricReport read_report_keyed(std::istream& in) {
    MetricReport report;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> keys;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "queries") {
            ss >> report.query_count;
        } else if (kind == "excluded") {
            std::string key;
            std::size_t count = 0;
            ss >> key >> count;
            report.excluded[key] = count;
        } else if (kind == "mean") {
            std::string key;
            double value = 0.0;
            ss >> key >> value;
            report.means[key] = value;
            keys.insert(key);
        } else if (kind == "query") {
            std::string qid, key;
            double value = 0.0;
            ss >> qid >> key >> value;
            report.per_query[qid][key] = value;
            keys.insert(key);
        } else {
            throw ParseError(line_no, "unknown report line kind \"" + kind + "\"");
        }
        if (ss.fail()) throw ParseError(line_no, "malformed report line");
    }
    return report;
}

namespace {

std::vector<std::string> report_columns(const MetricReport& report) {
    std::set<std::string> keys;
    for (const auto& [key, v] : report.means) keys.insert(key);
    for (const auto& [qid, metrics] : report.per_query) {
        for (const auto& [key, v] : metrics) keys.insert(key);
    }
    return {keys.begin(), keys.end()};
}

std::string format_cell(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

} // namespace

std::string format_report_table(const MetricReport& report) {
    const auto columns = report_columns(report);
    std::size_t id_width = std::string("query").size();
    for (const auto& [qid, m] : report.per_query) id_width = std::max(id_width, qid.size());

    std::vector<std::size_t> widths;
    for (const auto& c : columns) widths.push_back(std::max<std::size_t>(c.size(), 7));

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(id_width)) << "query";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << "  " << std::right << std::setw(static_cast<int>(widths[i])) << columns[i];
    }
    out << '\n';
    auto row = [&](const std::string& label, const std::map<std::string, double>& values) {
        out << std::left << std::setw(static_cast<int>(id_width)) << label;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            auto it = values.find(columns[i]);
            out << "  " << std::right << std::setw(static_cast<int>(widths[i]))
                << (it == values.end() ? std::string("-") : format_cell(it->second));
        }
        out << '\n';
    };
    for (const auto& [qid, metrics] : report.per_query) row(qid, metrics);
    row("mean", report.means);
    return out.str();
}

void write_report_csv(const MetricReport& report, std::ostream& out) {
    const auto columns = report_columns(report);
    out << "query";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    char buf[64];
    auto row = [&](const std::string& label, const std::map<std::string, double>& values) {
        out << label;
        for (const auto& c : columns) {
            out << ',';
            if (auto it = values.find(c); it != values.end()) {
                std::snprintf(buf, sizeof(buf), "%.6f", it->second);
                out << buf;
            }
        }
        out << '\n';
    };
    for (const auto& [qid, metrics] : report.per_query) row(qid, metrics);
    row("mean", report.means);
}

} // namespace thinkrank
