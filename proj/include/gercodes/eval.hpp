// Copyright 2026 The gercodes Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Top-1 scoring on seen and unseen queries.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gercodes/codebook.hpp"
#include "gercodes/codetrie.hpp"
#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/parallel.hpp"
#include "gercodes/tinyger.hpp"
#include "json.hpp"

namespace ger {

// Percent in, percent out; 0 when both are 0.
inline double harmonic_mean(double seen, double unseen) {
    require(seen >= 0.0 && seen <= 100.0 && unseen >= 0.0 && unseen <= 100.0, ErrorKind::kInvalidArgument,
            "harmonic_mean expects percentages in [0, 100]");
    if (seen + unseen == 0.0) return 0.0;
    return 2.0 * seen * unseen / (seen + unseen);
}

enum class Split { kSeen, kUnseen };

inline const char* to_string(Split s) { return s == Split::kSeen ? "seen" : "unseen"; }

struct EvalQuery {
    Matrix query;
    std::size_t gold = 0;  // entity index in the code book
    Split split = Split::kSeen;
};

struct QueryResult {
    std::vector<TokenValue> predicted;
    std::optional<std::size_t> resolved;
    bool correct = false;
};

struct LengthBucket {
    std::size_t count = 0;
    std::size_t correct = 0;

    double accuracy() const { return count == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / count; }
};

struct ConfusionSample {
    std::size_t query = 0;
    std::string gold_id;
    std::string predicted_id;  // empty for codes outside the book
    std::vector<TokenValue> predicted;
};

struct EvalReport {
    double seen_top1 = 0.0;
    double unseen_top1 = 0.0;
    double hm = 0.0;
    double overall_top1 = 0.0;
    double valid_code_rate = 0.0;  // fractions
    double seen_valid_code_rate = 0.0;
    double unseen_valid_code_rate = 0.0;
    std::size_t seen_queries = 0;
    std::size_t unseen_queries = 0;
    std::map<std::size_t, LengthBucket> per_length;  // name token count -> bucket
    std::vector<ConfusionSample> confusions;
    std::vector<QueryResult> results;
};

// Returns the top-1 code for a query, or an empty code for no prediction.
using Decoder = std::function<std::vector<TokenValue>(const EvalQuery&)>;

// `name_lengths[e]` is the token count of entity e's name. Queries are
// decoded in parallel; aggregation runs in query order.
inline EvalReport evaluate(std::span<const EvalQuery> queries, const CodeBook& book, const CodeTrie& trie,
                           std::span<const std::size_t> name_lengths, const Decoder& decode, std::size_t threads = 1,
                           std::size_t max_confusions = 20) {
    require(name_lengths.size() == book.size(), ErrorKind::kDimensionMismatch, "one name length per entity required");
    EvalReport r;
    for (const auto& q : queries) {
        require(q.gold < book.size(), ErrorKind::kInvalidArgument, "gold entity index out of range");
        (q.split == Split::kSeen ? r.seen_queries : r.unseen_queries) += 1;
    }
    require(r.seen_queries > 0, ErrorKind::kEmptyInput, "empty seen split");
    require(r.unseen_queries > 0, ErrorKind::kEmptyInput, "empty unseen split");

    r.results.resize(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) {
        auto& res = r.results[i];
        res.predicted = decode(queries[i]);
        if (!res.predicted.empty()) res.resolved = trie.resolve(res.predicted);
        res.correct = res.resolved && *res.resolved == queries[i].gold;
    });

    std::size_t seen_ok = 0, unseen_ok = 0, seen_valid = 0, unseen_valid = 0;
    std::set<std::size_t> confused;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        const auto& res = r.results[i];
        if (res.resolved) (q.split == Split::kSeen ? seen_valid : unseen_valid) += 1;
        if (res.correct) (q.split == Split::kSeen ? seen_ok : unseen_ok) += 1;
        auto& bucket = r.per_length[name_lengths[q.gold]];
        ++bucket.count;
        if (res.correct) ++bucket.correct;
        if (!res.correct && r.confusions.size() < max_confusions && confused.insert(q.gold).second) {
            r.confusions.push_back({i, book.id(q.gold), res.resolved ? book.id(*res.resolved) : std::string(),
                                    res.predicted});
        }
    }
    r.seen_top1 = 100.0 * static_cast<double>(seen_ok) / static_cast<double>(r.seen_queries);
    r.unseen_top1 = 100.0 * static_cast<double>(unseen_ok) / static_cast<double>(r.unseen_queries);
    r.hm = harmonic_mean(r.seen_top1, r.unseen_top1);
    r.overall_top1 = 100.0 * static_cast<double>(seen_ok + unseen_ok) / static_cast<double>(queries.size());
    r.valid_code_rate = static_cast<double>(seen_valid + unseen_valid) / static_cast<double>(queries.size());
    r.seen_valid_code_rate = static_cast<double>(seen_valid) / static_cast<double>(r.seen_queries);
    r.unseen_valid_code_rate = static_cast<double>(unseen_valid) / static_cast<double>(r.unseen_queries);
    return r;
}

struct DecodeOptions {
    std::size_t beam_width = 3;
    bool constrained = false;
};

// Top-1 of beam search on a trained model.
inline Decoder model_decoder(const TinyGerModel& model, const CodeBook& book, const CodeTrie& trie,
                             const DecodeOptions& opts) {
    BeamOptions beam;
    beam.beam_width = opts.beam_width;
    beam.max_len = book.max_length();
    beam.trie = opts.constrained ? &trie : nullptr;
    if (book.scheme() == Scheme::kCaption) beam.end_token = book.end_of_code();
    return [&model, beam](const EvalQuery& q) {
        const auto hyps = beam_decode(model, q.query, beam);
        return hyps.empty() ? std::vector<TokenValue>{} : hyps.front().code;
    };
}

inline std::string join_code(std::span<const TokenValue> code) {
    std::string s;
    for (std::size_t i = 0; i < code.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(code[i]);
    }
    return s;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["seen_top1"] = r.seen_top1;
    j["unseen_top1"] = r.unseen_top1;
    j["hm"] = r.hm;
    j["overall_top1"] = r.overall_top1;
    j["valid_code_rate"] = r.valid_code_rate;
    j["seen_valid_code_rate"] = r.seen_valid_code_rate;
    j["unseen_valid_code_rate"] = r.unseen_valid_code_rate;
    j["seen_queries"] = r.seen_queries;
    j["unseen_queries"] = r.unseen_queries;
    auto& lengths = j["per_length_accuracy"];
    lengths = nlohmann::ordered_json::object();
    for (const auto& [len, b] : r.per_length) {
        lengths[std::to_string(len)] = {{"queries", b.count}, {"accuracy", b.accuracy()}};
    }
    auto& conf = j["confusions"];
    conf = nlohmann::ordered_json::array();
    for (const auto& c : r.confusions) {
        conf.push_back({{"query", c.query},
                        {"gold", c.gold_id},
                        {"predicted", c.predicted_id.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(c.predicted_id)},
                        {"code", join_code(c.predicted)}});
    }
    return j;
}

// query, split, gold id, predicted code, predicted id ("-" if invalid), correct
inline void write_query_tsv(std::ostream& out, std::span<const EvalQuery> queries, const EvalReport& r,
                            const CodeBook& book) {
    for (std::size_t i = 0; i < r.results.size(); ++i) {
        const auto& res = r.results[i];
        out << i << '\t' << to_string(queries[i].split) << '\t' << book.id(queries[i].gold) << '\t'
            << join_code(res.predicted) << '\t' << (res.resolved ? book.id(*res.resolved) : std::string("-")) << '\t'
            << (res.correct ? 1 : 0) << '\n';
    }
}

}  // namespace ger
