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

// ger: command-line driver.
//
//   ger freq          token frequency table
//   ger build-codes   ald | atomic | caption | hkc code books
//   ger build-dataset top-k retrieval, unique assignment, leakage filter
//   ger synth         synthetic task or name corpus files
//   ger train-toy     train the small decoder on the synthetic task
//   ger eval          score a checkpoint
//   ger decode        beam-decode query vectors
//   ger sweep         HM over schemes x code lengths x seeds
//
// Every command writes <out>.meta.json with its configuration, seed and
// input digests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gercodes/gercodes.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Common {
    std::string entities;
    std::string vocab;
    std::string embeddings;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--entities", c.entities, "entities TSV (id<TAB>name)");
    cmd->add_option("--vocab", c.vocab, "wordpiece vocabulary, one token per line");
    cmd->add_option("--embeddings", c.embeddings, "EMB1 embedding file (ids in <file>.ids)");
    cmd->add_option("--out", c.out, "primary output path")->required();
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) ger::fail(ger::ErrorKind::kInvalidArgument, std::string("--") + what + " is required");
    if (!fs::is_regular_file(path)) ger::fail(ger::ErrorKind::kIo, std::string(what) + " file not found: '" + path + "'");
}

std::string digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(ger::fnv1a64(buf.str())));
    return std::string("fnv1a64:") + hex;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) ger::fail(ger::ErrorKind::kIo, "cannot write '" + path + "'");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) ger::fail(ger::ErrorKind::kIo, "write failed for '" + path + "'");
}

void write_json(const std::string& path, const ordered_json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

// Run metadata: everything needed to repeat the command.
class Meta {
   public:
    Meta(std::string command, const Common& c) {
        j_["command"] = std::move(command);
        j_["seed"] = c.seed;
        j_["threads"] = c.threads;
        j_["config"] = ordered_json::object();
        j_["inputs"] = ordered_json::object();
        j_["outputs"] = ordered_json::array();
    }

    template <class T>
    void config(const std::string& key, const T& value) { j_["config"][key] = value; }
    void seed(std::uint64_t s) { j_["seed"] = s; }
    void input(const std::string& path) { j_["inputs"][path] = digest(path); }
    void output(const std::string& path) { j_["outputs"].push_back(path); }
    void write(const std::string& out) { write_json(out + ".meta.json", j_); }

   private:
    ordered_json j_;
};

ger::ExperimentConfig load_config(const std::string& path, const Common& c, bool seed_given) {
    ger::ExperimentConfig cfg;
    if (!path.empty()) {
        require_file(path, "config");
        std::ifstream in(path, std::ios::binary);
        std::ostringstream text;
        text << in.rdbuf();
        try {
            cfg = ger::parse_config(text.str());
        } catch (const ger::Error& e) {
            throw ger::Error(e.kind(), path + ": " + e.what());
        }
    }
    if (seed_given) cfg.seed = c.seed;
    cfg.threads = c.threads;
    return cfg;
}

void write_codes(const std::string& path, const ger::CodeBook& book) {
    auto out = open_out(path);
    ger::write_codes_tsv(out, book);
    finish(out, path);
    std::ostringstream expect, got;
    ger::write_codes_tsv(expect, book);
    ger::write_codes_tsv(got, ger::read_codes_tsv(path, book.scheme(), book.params()));
    if (got.str() != expect.str()) ger::fail(ger::ErrorKind::kIo, "codes file '" + path + "' did not round-trip");
}

ordered_json code_stats(const ger::CodeBook& book, const std::string& path) {
    ordered_json j;
    j["scheme"] = ger::to_string(book.scheme());
    j["entities"] = book.size();
    j["code_length"] = book.max_length();
    j["vocab_size"] = book.vocab_size();
    j["fallback_fraction"] = book.fallback_fraction();
    j["disambiguation_histogram"] = ger::disambiguation_histogram(book);
    j["bytes_written"] = fs::file_size(path);
    return j;
}

// ---------------------------------------------------------------------------

int cmd_freq(const Common& c) {
    require_file(c.entities, "entities");
    require_file(c.vocab, "vocab");
    const auto vocab = ger::load_vocabulary(c.vocab);
    const auto entities = ger::load_entities(c.entities);
    const auto table = ger::build_frequency_table(vocab, entities, c.threads);
    auto out = open_out(c.out);
    ger::write_frequency_tsv(out, table, vocab);
    finish(out, c.out);
    Meta meta("freq", c);
    meta.input(c.entities);
    meta.input(c.vocab);
    meta.config("total_tokens", table.total);
    meta.output(c.out);
    meta.write(c.out);
    return 0;
}

struct CodeArgs {
    std::string scheme = "ald";
    std::uint32_t length = 4;
    std::uint32_t vocab_size = 0;
    std::uint32_t k = 10;
    std::uint32_t depth = 3;
    std::uint32_t truncate = 0;
    std::string selection = "least_frequent";
    std::string order = "least_first";
    std::string stats;
};

int cmd_build_codes(const Common& c, const CodeArgs& a) {
    const auto scheme = ger::parse_scheme(a.scheme);
    const std::string stats_path = a.stats.empty() ? c.out + ".stats.json" : a.stats;
    Meta meta("build-codes", c);
    meta.config("scheme", a.scheme);
    ger::CodeBook book;
    if (scheme == ger::Scheme::kHkc) {
        require_file(c.embeddings, "embeddings");
        require_file(ger::ids_path_for(c.embeddings), "embedding ids");
        const auto emb = ger::read_embeddings(c.embeddings, ger::ids_path_for(c.embeddings));
        meta.input(c.embeddings);
        meta.input(ger::ids_path_for(c.embeddings));
        meta.config("k", a.k);
        meta.config("depth", a.depth);
        book = ger::build_hkc_codes(emb, a.k, a.depth, c.seed);
    } else {
        require_file(c.entities, "entities");
        if (scheme != ger::Scheme::kAtomic || a.vocab_size == 0) require_file(c.vocab, "vocab");
        const auto entities = ger::load_entities(c.entities);
        meta.input(c.entities);
        meta.config("length", a.length);
        if (scheme == ger::Scheme::kAtomic) {
            std::uint32_t V = a.vocab_size;
            if (V == 0) {
                V = static_cast<std::uint32_t>(ger::load_vocabulary(c.vocab).size());
                meta.input(c.vocab);
            }
            meta.config("vocab_size", V);
            book = ger::build_atomic_codes(entities, a.length, V, c.seed);
        } else {
            const auto vocab = ger::load_vocabulary(c.vocab);
            meta.input(c.vocab);
            if (scheme == ger::Scheme::kAld) {
                ger::AldOptions opts;
                opts.length = a.length;
                opts.seed = c.seed;
                opts.selection = ger::parse_selection(a.selection);
                opts.order = ger::parse_order(a.order);
                meta.config("selection", a.selection);
                meta.config("order", a.order);
                book = ger::ablation_select(vocab, entities, opts, c.threads);
            } else {
                const auto corpus = ger::tokenize_corpus(vocab, entities, c.threads);
                ger::CaptionOptions opts;
                if (a.truncate > 0) opts.truncate_at = a.truncate;
                opts.seed = c.seed;
                meta.config("truncate", a.truncate);
                book = ger::build_caption_codes(entities, corpus, static_cast<std::uint32_t>(vocab.size()), opts);
            }
        }
    }
    book.validate();
    write_codes(c.out, book);
    write_json(stats_path, code_stats(book, c.out));
    meta.output(c.out);
    meta.output(stats_path);
    meta.write(c.out);
    return 0;
}

struct DatasetArgs {
    std::string items;
    std::string eval_items;
    std::size_t k = 3;
    double threshold = ger::kDefaultLeakageThreshold;
};

int cmd_build_dataset(const Common& c, const DatasetArgs& a) {
    require_file(c.embeddings, "embeddings");
    require_file(ger::ids_path_for(c.embeddings), "embedding ids");
    require_file(a.items, "items");
    require_file(ger::ids_path_for(a.items), "item ids");
    if (!a.eval_items.empty()) {
        require_file(a.eval_items, "eval-items");
        require_file(ger::ids_path_for(a.eval_items), "eval item ids");
    }
    const auto entities = ger::read_embeddings(c.embeddings, ger::ids_path_for(c.embeddings));
    const auto items = ger::read_embeddings(a.items, ger::ids_path_for(a.items));
    const auto retrieved = ger::topk_retrieve(entities, items, a.k, c.threads);
    auto pairs = ger::assign_unique(retrieved);
    std::vector<ger::Eviction> evictions;
    if (!a.eval_items.empty()) {
        const auto eval = ger::read_embeddings(a.eval_items, ger::ids_path_for(a.eval_items));
        auto filtered = ger::leakage_filter(pairs, items, eval, a.threshold, c.threads);
        pairs = std::move(filtered.kept);
        evictions = std::move(filtered.evictions);
    }
    auto out = open_out(c.out);
    ger::write_pairs_jsonl(out, pairs);
    finish(out, c.out);
    const std::string evict_path = c.out + ".evictions.tsv";
    auto ev = open_out(evict_path);
    ger::write_evictions_tsv(ev, evictions);
    finish(ev, evict_path);

    Meta meta("build-dataset", c);
    meta.input(c.embeddings);
    meta.input(a.items);
    if (!a.eval_items.empty()) meta.input(a.eval_items);
    meta.config("k", a.k);
    meta.config("dedup_threshold", a.threshold);
    meta.config("pairs", pairs.size());
    meta.config("evicted", evictions.size());
    meta.output(c.out);
    meta.output(evict_path);
    meta.write(c.out);
    return 0;
}

struct SynthArgs {
    std::string kind = "task";
    std::string config;
    std::size_t n_entities = 10000;
};

// Writes <out>/entities.tsv and <out>/vocab.txt; for the task kind also
// entity concept vectors and all query vectors as embedding files.
int cmd_synth(const Common& c, const SynthArgs& a, bool seed_given) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    Meta meta("synth", c);
    meta.config("kind", a.kind);
    std::vector<ger::EntityRecord> entities;
    ger::Vocabulary vocab;
    if (a.kind == "names") {
        auto corpus = ger::make_name_corpus(a.n_entities, c.seed);
        entities = std::move(corpus.entities);
        vocab = std::move(corpus.vocab);
        meta.config("entities", a.n_entities);
    } else if (a.kind == "task") {
        auto cfg = load_config(a.config, c, seed_given);
        if (seed_given) cfg.task.seed = c.seed;
        meta.seed(cfg.task.seed);
        if (!a.config.empty()) meta.input(a.config);
        meta.config("experiment", ger::format_config(cfg));
        auto task = ger::make_synthetic_task(cfg.task);
        ger::EmbeddingMatrix concepts{{}, task.concepts};
        for (const auto& e : task.entities) concepts.ids.push_back(e.entity_id);
        const auto concept_path = (dir / "concepts.emb").string();
        ger::write_embeddings(concept_path, ger::ids_path_for(concept_path), concepts);
        meta.output(concept_path);
        auto dump = [&](const std::vector<ger::SyntheticQuery>& qs, const char* name) {
            ger::EmbeddingMatrix emb{{}, ger::Matrix(qs.size(), task.concepts.cols())};
            for (std::size_t i = 0; i < qs.size(); ++i) {
                emb.ids.push_back(task.entities[qs[i].entity].entity_id + "#" + std::to_string(i));
                std::copy(qs[i].vector.begin(), qs[i].vector.end(), emb.vectors.row(i).begin());
            }
            const auto path = (dir / name).string();
            ger::write_embeddings(path, ger::ids_path_for(path), emb);
            meta.output(path);
        };
        dump(task.train, "train_queries.emb");
        dump(task.seen_test, "seen_queries.emb");
        dump(task.unseen_test, "unseen_queries.emb");
        entities = task.entities;
        vocab = task.vocab;
    } else {
        ger::fail(ger::ErrorKind::kInvalidArgument, "unknown synth kind '" + a.kind + "' (task | names)");
    }
    const auto entities_path = (dir / "entities.tsv").string();
    auto eo = open_out(entities_path);
    ger::write_entities(eo, entities);
    finish(eo, entities_path);
    const auto vocab_path = (dir / "vocab.txt").string();
    auto vo = open_out(vocab_path);
    for (const auto& t : vocab.tokens()) vo << t << '\n';
    finish(vo, vocab_path);
    meta.output(entities_path);
    meta.output(vocab_path);
    meta.write((dir / "synth").string());
    return 0;
}

int cmd_train_toy(const Common& c, const std::string& config, bool seed_given) {
    const auto cfg = load_config(config, c, seed_given);
    const auto task = ger::make_synthetic_task(cfg.task);
    auto result = ger::run_experiment(cfg, task);

    ger::save_checkpoint(c.out, result.model);
    const auto back = ger::load_checkpoint(c.out);
    if (!(back == result.model)) ger::fail(ger::ErrorKind::kIo, "checkpoint '" + c.out + "' did not round-trip");
    const std::string codes_path = c.out + ".codes.tsv";
    write_codes(codes_path, result.book);
    const std::string curve_path = c.out + ".loss.tsv";
    auto lc = open_out(curve_path);
    char buf[64];
    for (std::size_t i = 0; i < result.training.loss_curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", result.training.loss_curve[i]);
        lc << i << '\t' << buf << '\n';
    }
    finish(lc, curve_path);
    const std::string report_path = c.out + ".report.json";
    write_json(report_path, ger::report_json(result.report));

    Meta meta("train-toy", c);
    meta.seed(cfg.seed);
    if (!config.empty()) meta.input(config);
    meta.config("experiment", ger::format_config(cfg));
    for (const auto& p : {c.out, codes_path, curve_path, report_path}) meta.output(p);
    meta.write(c.out);
    std::cout << ger::report_json(result.report).dump() << '\n';
    return 0;
}

int cmd_eval(const Common& c, const std::string& config, const std::string& checkpoint, std::size_t beam,
             bool constrained, bool seed_given) {
    require_file(checkpoint, "checkpoint");
    auto cfg = load_config(config, c, seed_given);
    if (beam > 0) cfg.beam_width = beam;
    if (constrained) cfg.constrained = true;
    const auto task = ger::make_synthetic_task(cfg.task);
    const auto book = ger::build_task_codes(task, cfg);
    const auto model = ger::load_checkpoint(checkpoint);
    const auto trie = ger::CodeTrie::build(book);
    const auto queries = ger::eval_queries(task);
    const auto lengths = ger::name_lengths(task);
    const auto report = ger::evaluate(queries, book, trie, lengths,
                                      ger::model_decoder(model, book, trie, {cfg.beam_width, cfg.constrained}),
                                      cfg.threads);
    write_json(c.out, ger::report_json(report));
    const std::string tsv = c.out + ".queries.tsv";
    auto q = open_out(tsv);
    ger::write_query_tsv(q, queries, report, book);
    finish(q, tsv);

    Meta meta("eval", c);
    meta.seed(cfg.seed);
    if (!config.empty()) meta.input(config);
    meta.input(checkpoint);
    meta.config("experiment", ger::format_config(cfg));
    meta.output(c.out);
    meta.output(tsv);
    meta.write(c.out);
    return 0;
}

struct DecodeArgs {
    std::string checkpoint;
    std::string codes;
    std::string scheme = "ald";
    std::size_t beam = 3;
    bool constrained = false;
};

// Output: query_id<TAB>rank<TAB>code<TAB>log_prob<TAB>entity_id or "-".
int cmd_decode(const Common& c, const DecodeArgs& a) {
    require_file(a.checkpoint, "checkpoint");
    require_file(a.codes, "codes");
    require_file(c.embeddings, "embeddings");
    require_file(ger::ids_path_for(c.embeddings), "embedding ids");
    const auto model = ger::load_checkpoint(a.checkpoint);
    const auto scheme = ger::parse_scheme(a.scheme);
    ger::CodeBookParams params;
    params.vocab_size = model.config().vocab_size;
    params.length = model.config().max_len;
    const auto book = ger::read_codes_tsv(a.codes, scheme, params);
    const auto trie = ger::CodeTrie::build(book);
    const auto queries = ger::read_embeddings(c.embeddings, ger::ids_path_for(c.embeddings));
    ger::require(queries.dim() == model.config().query_dim, ger::ErrorKind::kDimensionMismatch,
                 "query dim " + std::to_string(queries.dim()) + " != model query dim " +
                     std::to_string(model.config().query_dim));
    ger::BeamOptions beam;
    beam.beam_width = a.beam;
    beam.max_len = book.max_length();
    beam.trie = a.constrained ? &trie : nullptr;
    if (scheme == ger::Scheme::kCaption) beam.end_token = book.end_of_code();

    std::vector<std::vector<ger::Hypothesis>> hyps(queries.size());
    ger::parallel_for(queries.size(), c.threads, [&](std::size_t i) {
        ger::Matrix q(1, queries.dim());
        const auto row = queries.vectors.row(i);
        std::copy(row.begin(), row.end(), q.data().begin());
        hyps[i] = ger::beam_decode(model, q, beam);
    });
    auto out = open_out(c.out);
    char buf[64];
    for (std::size_t i = 0; i < queries.size(); ++i) {
        for (std::size_t r = 0; r < hyps[i].size(); ++r) {
            const auto& h = hyps[i][r];
            const auto id = trie.resolve_id(h.code);
            std::snprintf(buf, sizeof(buf), "%.17g", h.log_prob);
            out << queries.ids[i] << '\t' << r + 1 << '\t' << ger::join_code(h.code) << '\t' << buf << '\t'
                << (id ? *id : std::string("-")) << '\n';
        }
    }
    finish(out, c.out);
    Meta meta("decode", c);
    meta.input(a.checkpoint);
    meta.input(a.codes);
    meta.input(c.embeddings);
    meta.config("scheme", a.scheme);
    meta.config("beam", a.beam);
    meta.config("constrained", a.constrained);
    meta.output(c.out);
    meta.write(c.out);
    return 0;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::istringstream v(item);
        T x{};
        v >> x;
        if (!v || !v.eof()) ger::fail(ger::ErrorKind::kParse, std::string("bad ") + what + " list '" + text + "'");
        out.push_back(x);
    }
    if (out.empty()) ger::fail(ger::ErrorKind::kInvalidArgument, std::string("empty ") + what + " list");
    return out;
}

struct SweepArgs {
    std::string config;
    std::string lengths = "2,4,6";
    std::string schemes = "ald";
    std::string seeds;
    std::size_t num_seeds = 1;
};

// Writes one row per run and one median row per (scheme, L).
int cmd_sweep(const Common& c, const SweepArgs& a, bool seed_given) {
    const auto cfg = load_config(a.config, c, seed_given);
    const auto lengths = parse_list<std::uint32_t>(a.lengths, "length");
    std::vector<ger::Scheme> schemes;
    for (const auto& s : parse_list<std::string>(a.schemes, "scheme")) schemes.push_back(ger::parse_scheme(s));
    std::vector<std::uint64_t> seeds;
    if (!a.seeds.empty()) {
        seeds = parse_list<std::uint64_t>(a.seeds, "seed");
    } else {
        for (std::size_t i = 0; i < a.num_seeds; ++i) seeds.push_back(cfg.seed + i);
    }
    const auto rows = ger::run_sweep(cfg, schemes, lengths, seeds, [](const ger::SweepRow& r) {
        std::fprintf(stderr, "%s L=%u seed=%llu hm=%.2f\n", ger::to_string(r.scheme), r.length,
                     static_cast<unsigned long long>(r.seed), r.report.hm);
    });
    auto out = open_out(c.out);
    out << "scheme\tL\tseed\tseen_top1\tunseen_top1\thm\tvalid_code_rate\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s\t%u\t%llu\t%.4f\t%.4f\t%.4f\t%.6f\n", ger::to_string(r.scheme), r.length,
                      static_cast<unsigned long long>(r.seed), r.report.seen_top1, r.report.unseen_top1, r.report.hm,
                      r.report.valid_code_rate);
        out << buf;
    }
    for (ger::Scheme s : schemes) {
        for (std::uint32_t L : lengths) {
            std::vector<double> seen, unseen, hm, valid;
            for (const auto& r : rows) {
                if (r.scheme != s || r.length != L) continue;
                seen.push_back(r.report.seen_top1);
                unseen.push_back(r.report.unseen_top1);
                hm.push_back(r.report.hm);
                valid.push_back(r.report.valid_code_rate);
            }
            std::snprintf(buf, sizeof(buf), "%s\t%u\tmedian\t%.4f\t%.4f\t%.4f\t%.6f\n", ger::to_string(s), L,
                          ger::median(seen), ger::median(unseen), ger::median(hm), ger::median(valid));
            out << buf;
        }
    }
    finish(out, c.out);
    Meta meta("sweep", c);
    meta.seed(cfg.seed);
    if (!a.config.empty()) meta.input(a.config);
    meta.config("experiment", ger::format_config(cfg));
    meta.config("lengths", a.lengths);
    meta.config("schemes", a.schemes);
    meta.config("seeds", seeds);
    meta.output(c.out);
    meta.write(c.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ger: entity codes, a small generative recognizer, and its evaluation"};
    app.require_subcommand(1);

    Common freq_c, codes_c, data_c, synth_c, train_c, eval_c, decode_c, sweep_c;

    auto* freq = app.add_subcommand("freq", "token frequency table");
    add_common(freq, freq_c);

    CodeArgs codes_a;
    auto* codes = app.add_subcommand("build-codes", "build a code book");
    add_common(codes, codes_c);
    codes->add_option("--scheme", codes_a.scheme, "ald | atomic | caption | hkc");
    codes->add_option("--length", codes_a.length, "code length L");
    codes->add_option("--vocab-size", codes_a.vocab_size, "atomic V (defaults to the vocabulary size)");
    codes->add_option("--k", codes_a.k, "hkc branching factor");
    codes->add_option("--depth", codes_a.depth, "hkc maximum depth");
    codes->add_option("--truncate", codes_a.truncate, "caption truncation (0 = none)");
    codes->add_option("--selection", codes_a.selection, "least_frequent | most_frequent | first | random");
    codes->add_option("--order", codes_a.order, "least_first | syntax | random | least_last");
    codes->add_option("--stats", codes_a.stats, "stats JSON path (default <out>.stats.json)");

    DatasetArgs data_a;
    auto* data = app.add_subcommand("build-dataset", "entity-based pretraining pairs");
    add_common(data, data_c);
    data->add_option("--items", data_a.items, "item embeddings")->required();
    data->add_option("--eval-items", data_a.eval_items, "evaluation item embeddings for the leakage filter");
    data->add_option("--k", data_a.k, "items retrieved per entity")->check(CLI::PositiveNumber);
    data->add_option("--dedup-threshold", data_a.threshold, "evict items above this cosine to any eval item");

    SynthArgs synth_a;
    auto* synth = app.add_subcommand("synth", "write synthetic inputs");
    add_common(synth, synth_c);
    synth->add_option("--kind", synth_a.kind, "task | names");
    synth->add_option("--config", synth_a.config, "experiment config (task kind)");
    synth->add_option("--count", synth_a.n_entities, "entities (names kind)");

    std::string train_config;
    auto* train = app.add_subcommand("train-toy", "train on the synthetic task");
    add_common(train, train_c);
    train->add_option("--config", train_config, "key = value experiment config");

    std::string eval_config, eval_ckpt;
    std::size_t eval_beam = 0;
    bool eval_constrained = false;
    auto* eval = app.add_subcommand("eval", "score a checkpoint on the synthetic task");
    add_common(eval, eval_c);
    eval->add_option("--config", eval_config, "experiment config used for training");
    eval->add_option("--checkpoint", eval_ckpt, "TGER checkpoint")->required();
    eval->add_option("--beam", eval_beam, "beam width (overrides config)");
    eval->add_flag("--constrained", eval_constrained, "restrict decoding to stored codes");

    DecodeArgs decode_a;
    auto* decode = app.add_subcommand("decode", "beam-decode query embeddings");
    add_common(decode, decode_c);
    decode->add_option("--checkpoint", decode_a.checkpoint, "TGER checkpoint")->required();
    decode->add_option("--codes", decode_a.codes, "codes TSV")->required();
    decode->add_option("--scheme", decode_a.scheme, "scheme of the codes file");
    decode->add_option("--beam", decode_a.beam, "beam width")->check(CLI::PositiveNumber);
    decode->add_flag("--constrained", decode_a.constrained, "restrict decoding to stored codes");

    SweepArgs sweep_a;
    auto* sweep = app.add_subcommand("sweep", "HM over schemes x lengths x seeds");
    add_common(sweep, sweep_c);
    sweep->add_option("--config", sweep_a.config, "base experiment config");
    sweep->add_option("--lengths", sweep_a.lengths, "comma-separated code lengths");
    sweep->add_option("--schemes", sweep_a.schemes, "comma-separated schemes");
    sweep->add_option("--seeds", sweep_a.seeds, "comma-separated seeds (overrides --num-seeds)");
    sweep->add_option("--num-seeds", sweep_a.num_seeds, "seeds seed, seed+1, ...");

    CLI11_PARSE(app, argc, argv);

    auto given = [](CLI::App* cmd) { return cmd->count("--seed") > 0; };
    try {
        if (*freq) return cmd_freq(freq_c);
        if (*codes) return cmd_build_codes(codes_c, codes_a);
        if (*data) return cmd_build_dataset(data_c, data_a);
        if (*synth) return cmd_synth(synth_c, synth_a, given(synth));
        if (*train) return cmd_train_toy(train_c, train_config, given(train));
        if (*eval) return cmd_eval(eval_c, eval_config, eval_ckpt, eval_beam, eval_constrained, given(eval));
        if (*decode) return cmd_decode(decode_c, decode_a);
        if (*sweep) return cmd_sweep(sweep_c, sweep_a, given(sweep));
    } catch (const ger::Error& e) {
        std::cerr << "ger: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ger: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
