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

// End-to-end runs on the synthetic task: codes, training, evaluation.
// Configs are "key = value" text; '#' starts a comment.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gercodes/codebook.hpp"
#include "gercodes/codetrie.hpp"
#include "gercodes/embedding.hpp"
#include "gercodes/error.hpp"
#include "gercodes/eval.hpp"
#include "gercodes/hkc.hpp"
#include "gercodes/synthetic.hpp"
#include "gercodes/tinyger.hpp"

namespace ger {

struct ExperimentConfig {
    SyntheticTaskOptions task;

    Scheme scheme = Scheme::kAld;
    std::uint32_t length = 4;
    std::uint32_t vocab_size = 0;  // atomic V; 0 means the tokenizer vocabulary size
    std::uint32_t hkc_k = 10;
    std::uint32_t hkc_depth = 3;

    std::uint32_t d_model = 64;
    std::uint32_t n_layers = 1;
    std::uint32_t n_heads = 2;

    TrainOptions train;

    std::size_t beam_width = 3;
    bool constrained = false;

    std::uint64_t seed = 0;  // codes, initialization and batch order
    std::size_t threads = 1;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    std::istringstream in{std::string(value)};
    T out{};
    in >> out;
    if (!in || !in.eof()) {
        fail(ErrorKind::kParse, "bad value '" + std::string(value) + "' for '" + std::string(key) + "'");
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    fail(ErrorKind::kParse, "bad boolean '" + std::string(value) + "' for '" + std::string(key) + "'");
}

}  // namespace detail

// Applies one setting; throws kParse for unknown keys or malformed values.
inline void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_number;
    if (key == "steps") c.train.steps = parse_number<std::size_t>(key, value);
    else if (key == "batch_size") c.train.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "lr") c.train.lr = parse_number<double>(key, value);
    else if (key == "momentum") c.train.momentum = parse_number<double>(key, value);
    else if (key == "label_smoothing") c.train.label_smoothing = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "scheme") c.scheme = parse_scheme(value);
    else if (key == "L" || key == "length") c.length = parse_number<std::uint32_t>(key, value);
    else if (key == "vocab_size") c.vocab_size = parse_number<std::uint32_t>(key, value);
    else if (key == "hkc_k") c.hkc_k = parse_number<std::uint32_t>(key, value);
    else if (key == "hkc_depth") c.hkc_depth = parse_number<std::uint32_t>(key, value);
    else if (key == "d_model") c.d_model = parse_number<std::uint32_t>(key, value);
    else if (key == "n_layers") c.n_layers = parse_number<std::uint32_t>(key, value);
    else if (key == "n_heads") c.n_heads = parse_number<std::uint32_t>(key, value);
    else if (key == "beam") c.beam_width = parse_number<std::size_t>(key, value);
    else if (key == "constrained") c.constrained = detail::parse_bool(key, value);
    else if (key == "threads") c.threads = parse_number<std::size_t>(key, value);
    else if (key == "entities") c.task.n_entities = parse_number<std::size_t>(key, value);
    else if (key == "families") c.task.n_families = parse_number<std::size_t>(key, value);
    else if (key == "task_dim") c.task.dim = parse_number<std::size_t>(key, value);
    else if (key == "sigma") c.task.sigma = parse_number<double>(key, value);
    else if (key == "queries_per_entity") c.task.queries_per_entity = parse_number<std::size_t>(key, value);
    else if (key == "unseen_fraction") c.task.unseen_fraction = parse_number<double>(key, value);
    else if (key == "seen_test_queries") c.task.seen_test_queries = parse_number<std::size_t>(key, value);
    else if (key == "task_seed") c.task.seed = parse_number<std::uint64_t>(key, value);
    else fail(ErrorKind::kParse, "unknown config key '" + std::string(key) + "'");
}

inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_config_value(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

// Canonical text form; parse_config(format_config(c)) == c.
inline std::string format_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "scheme = " << to_string(c.scheme) << '\n'
        << "L = " << c.length << '\n'
        << "vocab_size = " << c.vocab_size << '\n'
        << "hkc_k = " << c.hkc_k << '\n'
        << "hkc_depth = " << c.hkc_depth << '\n'
        << "d_model = " << c.d_model << '\n'
        << "n_layers = " << c.n_layers << '\n'
        << "n_heads = " << c.n_heads << '\n'
        << "steps = " << c.train.steps << '\n'
        << "batch_size = " << c.train.batch_size << '\n'
        << "lr = " << c.train.lr << '\n'
        << "momentum = " << c.train.momentum << '\n'
        << "label_smoothing = " << c.train.label_smoothing << '\n'
        << "beam = " << c.beam_width << '\n'
        << "constrained = " << (c.constrained ? "true" : "false") << '\n'
        << "seed = " << c.seed << '\n'
        << "threads = " << c.threads << '\n'
        << "entities = " << c.task.n_entities << '\n'
        << "families = " << c.task.n_families << '\n'
        << "task_dim = " << c.task.dim << '\n'
        << "sigma = " << c.task.sigma << '\n'
        << "queries_per_entity = " << c.task.queries_per_entity << '\n'
        << "unseen_fraction = " << c.task.unseen_fraction << '\n'
        << "seen_test_queries = " << c.task.seen_test_queries << '\n'
        << "task_seed = " << c.task.seed << '\n';
    return out.str();
}

inline CodeBook build_task_codes(const SyntheticTask& task, const ExperimentConfig& c) {
    const auto V = static_cast<std::uint32_t>(task.vocab.size());
    switch (c.scheme) {
        case Scheme::kAld: return build_ald_codes(task.vocab, task.entities, c.length, c.seed, c.threads);
        case Scheme::kAtomic:
            return build_atomic_codes(task.entities, c.length, c.vocab_size ? c.vocab_size : V, c.seed);
        case Scheme::kCaption: return build_caption_codes(task.vocab, task.entities, c.length, c.seed);
        case Scheme::kHkc: {
            EmbeddingMatrix emb;
            for (const auto& e : task.entities) emb.ids.push_back(e.entity_id);
            emb.vectors = task.concepts;
            return build_hkc_codes(emb, c.hkc_k, c.hkc_depth, c.seed);
        }
    }
    fail(ErrorKind::kInvalidArgument, "unknown scheme");
}

inline Matrix query_matrix(const SyntheticQuery& q) {
    Matrix m(1, q.vector.size());
    std::copy(q.vector.begin(), q.vector.end(), m.data().begin());
    return m;
}

inline std::vector<TrainingExample> training_examples(const SyntheticTask& task, const CodeBook& book) {
    std::vector<TrainingExample> out;
    out.reserve(task.train.size());
    for (const auto& q : task.train) out.push_back({query_matrix(q), book.code(q.entity).values});
    return out;
}

inline std::vector<EvalQuery> eval_queries(const SyntheticTask& task) {
    std::vector<EvalQuery> out;
    out.reserve(task.seen_test.size() + task.unseen_test.size());
    for (const auto& q : task.seen_test) out.push_back({query_matrix(q), q.entity, Split::kSeen});
    for (const auto& q : task.unseen_test) out.push_back({query_matrix(q), q.entity, Split::kUnseen});
    return out;
}

inline std::vector<std::size_t> name_lengths(const SyntheticTask& task) {
    std::vector<std::size_t> out;
    out.reserve(task.entities.size());
    for (const auto& e : task.entities) out.push_back(tokenize(task.vocab, e.name).values.size());
    return out;
}

inline ModelConfig model_config(const ExperimentConfig& c, const SyntheticTask& task, const CodeBook& book) {
    ModelConfig m;
    m.vocab_size = book.vocab_size();
    m.d_model = c.d_model;
    m.n_layers = c.n_layers;
    m.n_heads = c.n_heads;
    m.query_dim = static_cast<std::uint32_t>(task.concepts.cols());
    m.n_query = 1;
    m.max_len = static_cast<std::uint32_t>(book.max_length());
    m.seed = derive_seed(c.seed, "model");
    return m;
}

struct ExperimentResult {
    CodeBook book;
    TinyGerModel model;
    TrainReport training;
    EvalReport report;
};

inline EvalReport evaluate_model(const TinyGerModel& model, const SyntheticTask& task, const CodeBook& book,
                                 const DecodeOptions& decode, std::size_t threads = 1) {
    const auto trie = CodeTrie::build(book);
    const auto queries = eval_queries(task);
    const auto lengths = name_lengths(task);
    return evaluate(queries, book, trie, lengths, model_decoder(model, book, trie, decode), threads);
}

inline ExperimentResult run_experiment(const ExperimentConfig& c, const SyntheticTask& task) {
    ExperimentResult r;
    r.book = build_task_codes(task, c);
    r.book.validate();
    r.model = TinyGerModel(model_config(c, task, r.book));
    const auto data = training_examples(task, r.book);
    TrainOptions train = c.train;
    train.seed = derive_seed(c.seed, "train");
    train.threads = c.threads;
    r.training = ger::train(r.model, data, train);
    r.report = evaluate_model(r.model, task, r.book, {c.beam_width, c.constrained}, c.threads);
    return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
    return run_experiment(c, make_synthetic_task(c.task));
}

struct SweepRow {
    Scheme scheme = Scheme::kAld;
    std::uint32_t length = 0;
    std::uint64_t seed = 0;
    EvalReport report;
};

// One run per (scheme, length, seed) on a shared task, in that nesting order.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& base, std::span<const Scheme> schemes,
                                       std::span<const std::uint32_t> lengths, std::span<const std::uint64_t> seeds,
                                       const std::function<void(const SweepRow&)>& on_row = {}) {
    const auto task = make_synthetic_task(base.task);
    std::vector<SweepRow> rows;
    for (Scheme s : schemes) {
        for (std::uint32_t L : lengths) {
            for (std::uint64_t seed : seeds) {
                ExperimentConfig c = base;
                c.scheme = s;
                c.length = L;
                c.seed = seed;
                SweepRow row{s, L, seed, run_experiment(c, task).report};
                row.report.results.clear();
                if (on_row) on_row(row);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

inline double median(std::vector<double> v) {
    require(!v.empty(), ErrorKind::kEmptyInput, "median of nothing");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace ger
