#include "thinkrank/trec_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace thinkrank {

namespace {

using nlohmann::json;

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) fields.push_back(field);
    return fields;
}

bool parse_int(const std::string& s, int& out) {
    try {
        std::size_t pos = 0;
        out = std::stoi(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

json parse_json_line(const std::string& line, std::size_t line_no) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
        throw ParseError(line_no, "not a JSON object");
    }
    return rec;
}

std::string require_string(const json& rec, const char* key, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) {
        throw ParseError(line_no, std::string("missing or non-string \"") + key + "\"");
    }
    return it->get<std::string>();
}

Query query_from_json(const json& rec, std::size_t line_no) {
    Query q;
    q.id = require_string(rec, "_id", line_no);
    q.text = require_string(rec, "text", line_no);
    if (auto it = rec.find("instruction"); it != rec.end() && it->is_string()) {
        q.instruction = it->get<std::string>();
    }
    if (auto it = rec.find("dataset_key"); it != rec.end() && it->is_string()) {
        q.dataset_key = it->get<std::string>();
    }
    return q;
}

Document document_from_json(const json& rec, std::size_t line_no) {
    Document d;
    d.id = require_string(rec, "_id", line_no);
    d.text = require_string(rec, "text", line_no);
    if (auto it = rec.find("title"); it != rec.end() && it->is_string()) {
        d.title = it->get<std::string>();
    }
    return d;
}

json query_to_json(const Query& q) {
    json rec = {{"_id", q.id}, {"text", q.text}};
    if (q.instruction) rec["instruction"] = *q.instruction;
    if (q.dataset_key) rec["dataset_key"] = *q.dataset_key;
    return rec;
}

} // namespace

std::vector<QrelEntry> parse_qrels(std::istream& in) {
    std::vector<QrelEntry> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_ws(line);
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        int grade = 0;
        if (!parse_int(fields[3], grade)) {
            throw ParseError(line_no, "non-integer grade \"" + fields[3] + "\"");
        }
        if (grade < 0) {
            throw ParseError(line_no, "negative grade " + std::to_string(grade));
        }
        if (!seen.insert({fields[0], fields[2]}).second) {
            throw ParseError(line_no, "duplicate judgment for (" + fields[0] + ", " + fields[2] + ")");
        }
        out.push_back(QrelEntry{fields[0], fields[2], grade});
    }
    return out;
}

void write_qrels(std::span<const QrelEntry> entries, std::ostream& out) {
    for (const auto& e : entries) {
        out << e.query_id << " 0 " << e.doc_id << ' ' << e.grade << '\n';
    }
}

std::vector<RunEntry> parse_run(std::istream& in, bool allow_foreign) {
    std::vector<RunEntry> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_ws(line);
        if (fields.size() != 6) {
            throw ParseError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
        }
        RunEntry e;
        e.query_id = fields[0];
        e.doc_id = fields[2];
        if (!parse_int(fields[3], e.rank) || e.rank < 1) {
            throw ParseError(line_no, "bad rank \"" + fields[3] + "\"");
        }
        if (!parse_double(fields[4], e.score)) {
            throw ParseError(line_no, "bad score \"" + fields[4] + "\"");
        }
        e.run_tag = fields[5];
        if (!seen.insert({e.query_id, e.doc_id}).second) {
            throw ParseError(line_no, "duplicate entry for (" + e.query_id + ", " + e.doc_id + ")");
        }
        out.push_back(std::move(e));
    }
    if (!allow_foreign) {
        for (const auto& [qid, list] : group_run(out)) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i].rank != static_cast<int>(i) + 1) {
                    throw ValidationError("run for query " + qid + " has rank gap at rank " +
                                          std::to_string(list[i].rank));
                }
                if (i > 0 && list[i].score > list[i - 1].score) {
                    throw ValidationError("run for query " + qid +
                                          " has increasing score at rank " +
                                          std::to_string(list[i].rank));
                }
            }
        }
    }
    return out;
}

void write_run(std::span<const RunEntry> entries, std::ostream& out) {
    char score_buf[64];
    for (const auto& e : entries) {
        std::snprintf(score_buf, sizeof(score_buf), "%.6f", e.score);
        out << e.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << score_buf << ' '
            << e.run_tag << '\n';
    }
}

std::vector<Document> load_corpus(std::istream& in) {
    std::vector<Document> out;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Document d = document_from_json(parse_json_line(line, line_no), line_no);
        if (d.id.empty()) throw ParseError(line_no, "empty \"_id\"");
        if (!ids.insert(d.id).second) {
            throw ParseError(line_no, "duplicate document id \"" + d.id + "\"");
        }
        out.push_back(std::move(d));
    }
    return out;
}

void write_corpus(std::span<const Document> docs, std::ostream& out) {
    for (const auto& d : docs) {
        json rec = {{"_id", d.id}, {"title", d.title}, {"text", d.text}};
        out << rec.dump() << '\n';
    }
}

std::vector<Query> load_queries(std::istream& in) {
    std::vector<Query> out;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Query q = query_from_json(parse_json_line(line, line_no), line_no);
        if (q.id.empty()) throw ParseError(line_no, "empty \"_id\"");
        if (!ids.insert(q.id).second) {
            throw ParseError(line_no, "duplicate query id \"" + q.id + "\"");
        }
        out.push_back(std::move(q));
    }
    return out;
}

void write_queries(std::span<const Query> queries, std::ostream& out) {
    for (const auto& q : queries) {
        out << query_to_json(q).dump() << '\n';
    }
}

PromptMap load_prompt_map(std::istream& in) {
    PromptMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(line_no, "expected <dataset_key>\\t<template>");
        }
        std::string key = line.substr(0, tab);
        std::string body = line.substr(tab + 1);
        if (key.empty()) throw ParseError(line_no, "empty dataset key");
        if (body.find(kQueryPlaceholder) == std::string::npos) {
            throw ValidationError("prompt template for \"" + key + "\" lacks " +
                                  kQueryPlaceholder);
        }
        if (map.entries.count(key)) {
            throw ParseError(line_no, "duplicate dataset key \"" + key + "\"");
        }
        map.entries[key] = std::move(body);
    }
    return map;
}

void write_prompt_map(const PromptMap& map, std::ostream& out) {
    for (const auto& [key, body] : map.entries) {
        out << key << '\t' << body << '\n';
    }
}

std::vector<PairedInstance> load_paired_instances(std::istream& in) {
    std::vector<PairedInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = parse_json_line(line, line_no);
        PairedInstance inst;
        inst.id = require_string(rec, "id", line_no);
        for (const char* key : {"q1", "q2", "doc1", "doc2"}) {
            if (!rec.contains(key) || !rec[key].is_object()) {
                throw ParseError(line_no, std::string("missing nested record \"") + key + "\"");
            }
        }
        inst.query_a = query_from_json(rec["q1"], line_no);
        inst.query_b = query_from_json(rec["q2"], line_no);
        inst.doc_a = document_from_json(rec["doc1"], line_no);
        inst.doc_b = document_from_json(rec["doc2"], line_no);
        std::set<std::string> ids{inst.query_a.id, inst.query_b.id, inst.doc_a.id, inst.doc_b.id};
        if (ids.size() != 4) {
            throw ParseError(line_no, "instance \"" + inst.id + "\" reuses an id");
        }
        out.push_back(std::move(inst));
    }
    return out;
}

std::map<std::string, Document> index_corpus(std::span<const Document> docs) {
    std::map<std::string, Document> map;
    for (const auto& d : docs) map[d.id] = d;
    return map;
}

std::map<std::string, Query> index_queries(std::span<const Query> queries) {
    std::map<std::string, Query> map;
    for (const auto& q : queries) map[q.id] = q;
    return map;
}

} // namespace thinkrank
