#include "thinkrank/qrel_audit.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "thinkrank/metrics.hpp"

namespace thinkrank {

namespace {

constexpr std::size_t kExcerptLength = 500;

const char* kSheetHeader =
    "query_id,doc_id,query_text,doc_text_excerpt,current_grade,proposed_grade,"
    "rank_positions,source_runs";

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// One CSV record, quotes honored; multi-line quoted fields supported.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in,
                                                        std::size_t& line_no) {
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    ++line_no;

    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    std::size_t i = 0;
    while (true) {
        if (i >= line.size()) {
            if (in_quotes) {
                if (!std::getline(in, line)) {
                    throw ParseError(line_no, "unterminated quoted CSV field");
                }
                ++line_no;
                field += '\n';
                i = 0;
                continue;
            }
            fields.push_back(field);
            break;
        }
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // tolerate CRLF
        } else {
            field += c;
        }
        ++i;
    }
    return fields;
}

std::string join_tags(const std::vector<std::string>& tags) {
    std::string out;
    for (const auto& t : tags) {
        if (!out.empty()) out += ';';
        out += t;
    }
    return out;
}

std::string join_ranks(const std::vector<std::pair<std::string, int>>& ranks) {
    std::string out;
    for (const auto& [tag, rank] : ranks) {
        if (!out.empty()) out += ';';
        out += tag + ":" + std::to_string(rank);
    }
    return out;
}

} // namespace

std::vector<AnnotationItem> find_audit_set(const std::vector<std::vector<RunEntry>>& runs,
                                           std::span<const QrelEntry> qrels, int k,
                                           int rel_threshold,
                                           const std::map<std::string, Query>& queries,
                                           const std::map<std::string, Document>& docs) {
    if (k < 1) throw ValidationError("find_audit_set: k must be >= 1");
    const auto qrel_map = group_qrels(qrels);

    std::map<std::pair<std::string, std::string>, AnnotationItem> items;
    for (const auto& run : runs) {
        for (const auto& [qid, entries] : group_run(run)) {
            auto query_qrels_it = qrel_map.find(qid);
            for (const auto& e : entries) {
                if (e.rank > k) break;
                std::optional<int> grade;
                if (query_qrels_it != qrel_map.end()) {
                    auto git = query_qrels_it->second.find(e.doc_id);
                    if (git != query_qrels_it->second.end()) grade = git->second;
                }
                if (grade && *grade >= rel_threshold) continue;  // judged relevant: no audit

                auto [it, inserted] = items.try_emplace({qid, e.doc_id});
                AnnotationItem& item = it->second;
                if (inserted) {
                    item.query_id = qid;
                    item.doc_id = e.doc_id;
                    item.current_grade = grade;
                    if (auto q = queries.find(qid); q != queries.end()) {
                        item.query_text = q->second.text;
                    }
                    if (auto d = docs.find(e.doc_id); d != docs.end()) {
                        item.doc_text = d->second.title.empty()
                                            ? d->second.text
                                            : d->second.title + " " + d->second.text;
                    }
                }
                if (std::find(item.source_runs.begin(), item.source_runs.end(), e.run_tag) ==
                    item.source_runs.end()) {
                    item.source_runs.push_back(e.run_tag);
                }
                item.rank_positions.emplace_back(e.run_tag, e.rank);
            }
        }
    }

    std::vector<AnnotationItem> out;
    out.reserve(items.size());
    for (auto& [key, item] : items) out.push_back(std::move(item));
    return out;
}

MergeResult merge_annotations(std::span<const QrelEntry> qrels,
                              std::span<const AnnotationItem> annotations) {
    // Collapse duplicates; differing proposals for one key are an error.
    std::map<std::pair<std::string, std::string>, int> proposed;
    for (const auto& a : annotations) {
        if (!a.proposed_grade) {
            throw ValidationError("annotation (" + a.query_id + ", " + a.doc_id +
                                  ") lacks a proposed grade");
        }
        if (*a.proposed_grade < 0) {
            throw ValidationError("annotation (" + a.query_id + ", " + a.doc_id +
                                  ") proposes a negative grade");
        }
        auto key = std::make_pair(a.query_id, a.doc_id);
        auto [it, inserted] = proposed.try_emplace(key, *a.proposed_grade);
        if (!inserted && it->second != *a.proposed_grade) {
            throw ValidationError("conflicting annotations for (" + a.query_id + ", " +
                                  a.doc_id + "): grades " + std::to_string(it->second) +
                                  " and " + std::to_string(*a.proposed_grade));
        }
    }

    MergeResult result;
    result.fixed.assign(qrels.begin(), qrels.end());
    std::set<std::pair<std::string, std::string>> overridden;
    for (auto& e : result.fixed) {
        auto it = proposed.find({e.query_id, e.doc_id});
        if (it == proposed.end()) continue;
        result.log.push_back(ChangeLogEntry{e.query_id, e.doc_id, e.grade, it->second,
                                            ChangeCategory::changed_grade});
        e.grade = it->second;
        overridden.insert(it->first);
    }
    for (const auto& [key, grade] : proposed) {
        if (overridden.count(key)) continue;
        result.fixed.push_back(QrelEntry{key.first, key.second, grade});
        result.log.push_back(
            ChangeLogEntry{key.first, key.second, std::nullopt, grade,
                           ChangeCategory::unjudged_to_graded});
    }
    return result;
}

std::vector<RunDelta> metric_delta(const std::vector<std::vector<RunEntry>>& runs,
                                   std::span<const QrelEntry> qrels_original,
                                   std::span<const QrelEntry> qrels_fixed, int k) {
    if (qrels_original.empty() || qrels_fixed.empty()) {
        throw ValidationError("metric_delta: both judgment sets must be nonempty");
    }
    std::vector<RunDelta> out;
    for (const auto& run : runs) {
        RunDelta delta;
        if (!run.empty()) delta.run_tag = run.front().run_tag;
        const auto original =
            evaluate(run, qrels_original, {k}, {"ndcg", "judged"});
        const auto fixed = evaluate(run, qrels_fixed, {k}, {"ndcg", "judged"});
        const std::string ndcg_key = "ndcg@" + std::to_string(k);
        const std::string judged_key = "judged@" + std::to_string(k);
        if (auto it = original.means.find(ndcg_key); it != original.means.end()) {
            delta.ndcg_original = it->second;
        }
        if (auto it = fixed.means.find(ndcg_key); it != fixed.means.end()) {
            delta.ndcg_fixed = it->second;
        }
        if (auto it = original.means.find(judged_key); it != original.means.end()) {
            delta.judged_original = it->second;
        }
        if (auto it = fixed.means.find(judged_key); it != fixed.means.end()) {
            delta.judged_fixed = it->second;
        }
        out.push_back(std::move(delta));
    }
    return out;
}

void write_annotation_sheet(std::span<const AnnotationItem> items, std::ostream& out) {
    out << kSheetHeader << '\n';
    for (const auto& item : items) {
        std::string excerpt = item.doc_text.substr(0, kExcerptLength);
        out << csv_escape(item.query_id) << ',' << csv_escape(item.doc_id) << ','
            << csv_escape(item.query_text) << ',' << csv_escape(excerpt) << ','
            << (item.current_grade ? std::to_string(*item.current_grade) : std::string{}) << ','
            << (item.proposed_grade ? std::to_string(*item.proposed_grade) : std::string{}) << ','
            << csv_escape(join_ranks(item.rank_positions)) << ','
            << csv_escape(join_tags(item.source_runs)) << '\n';
    }
}

std::vector<AnnotationItem> read_annotation_sheet(std::istream& in) {
    std::size_t line_no = 0;
    auto header = read_csv_record(in, line_no);
    if (!header) throw ParseError(1, "empty annotation sheet");
    {
        std::ostringstream joined;
        for (std::size_t i = 0; i < header->size(); ++i) {
            if (i) joined << ',';
            joined << (*header)[i];
        }
        if (joined.str() != kSheetHeader) {
            throw ParseError(1, "unexpected sheet header \"" + joined.str() + "\"");
        }
    }

    std::vector<AnnotationItem> items;
    while (auto record = read_csv_record(in, line_no)) {
        if (record->size() == 1 && (*record)[0].empty()) continue;  // blank line
        if (record->size() != 8) {
            throw ParseError(line_no, "expected 8 CSV fields, got " +
                                          std::to_string(record->size()));
        }
        AnnotationItem item;
        item.query_id = (*record)[0];
        item.doc_id = (*record)[1];
        item.query_text = (*record)[2];
        item.doc_text = (*record)[3];
        auto parse_grade = [&](const std::string& s,
                               const char* what) -> std::optional<int> {
            if (s.empty()) return std::nullopt;
            try {
                std::size_t pos = 0;
                int v = std::stoi(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                throw ParseError(line_no, std::string("bad ") + what + " \"" + s + "\"");
            }
        };
        item.current_grade = parse_grade((*record)[4], "current_grade");
        item.proposed_grade = parse_grade((*record)[5], "proposed_grade");
        {
            std::istringstream ss((*record)[6]);
            std::string part;
            while (std::getline(ss, part, ';')) {
                const auto colon = part.rfind(':');
                if (colon == std::string::npos) continue;
                item.rank_positions.emplace_back(part.substr(0, colon),
                                                 std::stoi(part.substr(colon + 1)));
            }
        }
        {
            std::istringstream ss((*record)[7]);
            std::string part;
            while (std::getline(ss, part, ';')) {
                if (!part.empty()) item.source_runs.push_back(part);
            }
        }
        items.push_back(std::move(item));
    }
    return items;
}

void write_change_log(std::span<const ChangeLogEntry> log, std::ostream& out) {
    std::size_t unjudged = 0;
    std::size_t changed = 0;
    for (const auto& e : log) {
        if (e.category == ChangeCategory::unjudged_to_graded) {
            ++unjudged;
            out << "unjudged_to_graded " << e.query_id << ' ' << e.doc_id << " - "
                << e.new_grade << '\n';
        } else {
            ++changed;
            out << "changed_grade " << e.query_id << ' ' << e.doc_id << ' ' << *e.old_grade
                << ' ' << e.new_grade << '\n';
        }
    }
    out << "total " << log.size() << '\n';
    out << "count unjudged_to_graded " << unjudged << '\n';
    out << "count changed_grade " << changed << '\n';
}

} // namespace thinkrank
