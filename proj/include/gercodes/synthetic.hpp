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

// Synthetic recognition tasks. Entities belong to families; a name is the
// family word followed by one or two attribute words drawn from that family's
// pool, and every word is two wordpieces. Concept vectors add attribute
// offsets to a family centroid, and queries are noisy concepts.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gercodes/codebook.hpp"
#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/rng.hpp"
#include "gercodes/tokenizer.hpp"

namespace ger {

struct SyntheticTaskOptions {
    std::size_t n_entities = 1000;
    std::size_t n_families = 20;
    std::size_t dim = 64;
    double sigma = 0.3;
    std::size_t queries_per_entity = 20;
    std::uint64_t seed = 0;
    double unseen_fraction = 0.2;
    // Held-out queries per seen entity; the rest are for training.
    std::size_t seen_test_queries = 5;
};

struct SyntheticQuery {
    std::size_t entity = 0;  // index into SyntheticTask::entities
    std::vector<double> vector;
};

struct SyntheticTask {
    Vocabulary vocab;
    std::vector<EntityRecord> entities;
    std::vector<std::size_t> family;
    std::vector<std::vector<std::size_t>> attributes;  // per entity, pool indices
    Matrix concepts;
    std::vector<bool> unseen;
    std::vector<SyntheticQuery> train;
    std::vector<SyntheticQuery> seen_test;
    std::vector<SyntheticQuery> unseen_test;
    double sigma = 0.0;
};

namespace detail {

inline constexpr char kConsonants[] = "bdfghklmnprstvz";
inline constexpr char kVowels[] = "aeiou";

// Four-letter consonant-vowel-consonant-vowel syllable for index i.
inline std::string syllable(std::size_t i) {
    constexpr std::size_t nc = sizeof(kConsonants) - 1;
    constexpr std::size_t nv = sizeof(kVowels) - 1;
    std::string s(4, ' ');
    s[3] = kVowels[i % nv];
    i /= nv;
    s[2] = kConsonants[i % nc];
    i /= nc;
    s[1] = kVowels[i % nv];
    i /= nv;
    s[0] = kConsonants[i % nc];
    return s;
}

inline constexpr std::size_t kSyllableCount = 15 * 5 * 15 * 5;

// Hands out distinct syllables in a seeded order.
class SyllableSource {
   public:
    SyllableSource(std::size_t needed, Rng& rng) {
        require(needed <= kSyllableCount, ErrorKind::kInvalidArgument,
                "synthetic task needs " + std::to_string(needed) + " syllables, only " +
                    std::to_string(kSyllableCount) + " exist");
        order_.resize(kSyllableCount);
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        rng.shuffle(std::span<std::size_t>(order_));
    }

    std::string next() {
        require(cursor_ < order_.size(), ErrorKind::kInvalidArgument, "syllables exhausted");
        return syllable(order_[cursor_++]);
    }

   private:
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// Two-piece word: start piece plus continuation piece. Every piece is four
// letters, so greedy longest match splits the word back into the same two.
struct Word {
    std::string head;
    std::string tail;

    std::string text() const { return head + tail; }
};

inline Word make_word(SyllableSource& src, std::vector<std::string>& vocab) {
    Word w{src.next(), src.next()};
    vocab.push_back(w.head);
    vocab.push_back("##" + w.tail);
    return w;
}

inline std::size_t attribute_pool_size(std::size_t members) {
    std::size_t a = 1;
    while (a + a * (a - 1) / 2 < members) ++a;
    return a;
}

}  // namespace detail

inline SyntheticTask make_synthetic_task(const SyntheticTaskOptions& opts) {
    require(opts.n_entities >= 1, ErrorKind::kInvalidArgument, "synthetic task needs entities");
    require(opts.n_families >= 1 && opts.n_families <= opts.n_entities, ErrorKind::kInvalidArgument,
            "need 1 <= n_families <= n_entities");
    require(opts.dim >= 1 && opts.sigma >= 0.0, ErrorKind::kInvalidArgument, "bad dim or sigma");
    require(opts.unseen_fraction >= 0.0 && opts.unseen_fraction < 1.0, ErrorKind::kInvalidArgument,
            "unseen_fraction must lie in [0, 1)");

    Rng name_rng(derive_seed(opts.seed, "synthetic/names"));
    Rng vec_rng(derive_seed(opts.seed, "synthetic/vectors"));
    Rng split_rng(derive_seed(opts.seed, "synthetic/split"));
    Rng query_rng(derive_seed(opts.seed, "synthetic/queries"));

    // Family sizes differ by at most one.
    std::vector<std::size_t> members(opts.n_families, opts.n_entities / opts.n_families);
    for (std::size_t f = 0; f < opts.n_entities % opts.n_families; ++f) ++members[f];

    std::size_t words = opts.n_families;
    std::vector<std::size_t> pool(opts.n_families);
    for (std::size_t f = 0; f < opts.n_families; ++f) {
        pool[f] = detail::attribute_pool_size(members[f]);
        words += pool[f];
    }
    detail::SyllableSource src(2 * words, name_rng);
    std::vector<std::string> vocab_tokens{"[UNK]"};
    std::vector<detail::Word> family_words;
    std::vector<std::vector<detail::Word>> attribute_words(opts.n_families);
    for (std::size_t f = 0; f < opts.n_families; ++f) {
        family_words.push_back(detail::make_word(src, vocab_tokens));
        for (std::size_t a = 0; a < pool[f]; ++a) attribute_words[f].push_back(detail::make_word(src, vocab_tokens));
    }

    const std::size_t d = opts.dim;
    auto gaussian = [&](Rng& rng) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        return v;
    };
    std::vector<std::vector<double>> centroid;
    std::vector<std::vector<std::vector<double>>> offset(opts.n_families);
    for (std::size_t f = 0; f < opts.n_families; ++f) {
        centroid.push_back(gaussian(vec_rng));
        for (std::size_t a = 0; a < pool[f]; ++a) offset[f].push_back(gaussian(vec_rng));
    }

    SyntheticTask task;
    task.vocab = Vocabulary(vocab_tokens);
    task.sigma = opts.sigma;
    task.concepts = Matrix(opts.n_entities, d);
    for (std::size_t f = 0; f < opts.n_families; ++f) {
        // Each member takes a distinct single or pair of attributes.
        std::vector<std::vector<std::size_t>> combos;
        for (std::size_t a = 0; a < pool[f]; ++a) combos.push_back({a});
        for (std::size_t a = 0; a < pool[f]; ++a) {
            for (std::size_t b = a + 1; b < pool[f]; ++b) combos.push_back({a, b});
        }
        name_rng.shuffle(std::span<std::vector<std::size_t>>(combos));
        for (std::size_t m = 0; m < members[f]; ++m) {
            auto attrs = combos[m];
            if (attrs.size() == 2 && name_rng.uniform_int(0, 1) == 1) std::swap(attrs[0], attrs[1]);
            const std::size_t e = task.entities.size();
            std::string name = family_words[f].text();
            auto row = task.concepts.row(e);
            for (std::size_t j = 0; j < d; ++j) row[j] = centroid[f][j];
            for (std::size_t a : attrs) {
                name += ' ' + attribute_words[f][a].text();
                for (std::size_t j = 0; j < d; ++j) row[j] += offset[f][a][j];
            }
            char id[32];
            std::snprintf(id, sizeof(id), "E%06zu", e);
            task.entities.push_back({id, name});
            task.family.push_back(f);
            task.attributes.push_back(std::move(attrs));
        }
    }

    // Hold out entities only from families that keep at least one seen member.
    task.unseen.assign(opts.n_entities, false);
    std::size_t first = 0;
    for (std::size_t f = 0; f < opts.n_families; ++f) {
        const auto held = static_cast<std::size_t>(std::floor(opts.unseen_fraction * static_cast<double>(members[f])));
        const std::size_t take = std::min(held, members[f] - 1);
        std::vector<std::size_t> idx(members[f]);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = first + i;
        split_rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t i = 0; i < take; ++i) task.unseen[idx[i]] = true;
        first += members[f];
    }

    const std::size_t seen_test = std::min(opts.seen_test_queries, opts.queries_per_entity);
    for (std::size_t e = 0; e < opts.n_entities; ++e) {
        const auto concept_row = task.concepts.row(e);
        for (std::size_t q = 0; q < opts.queries_per_entity; ++q) {
            SyntheticQuery query{e, std::vector<double>(concept_row.begin(), concept_row.end())};
            if (opts.sigma > 0.0) {
                for (auto& x : query.vector) x += opts.sigma * query_rng.normal();
            }
            if (task.unseen[e]) {
                task.unseen_test.push_back(std::move(query));
            } else if (q < opts.queries_per_entity - seen_test) {
                task.train.push_back(std::move(query));
            } else {
                task.seen_test.push_back(std::move(query));
            }
        }
    }
    return task;
}

// Name corpus for code-construction studies: two common words from small
// pools, then one rarer word of two or three pieces. Names are distinct and
// every name has at least four distinct tokens.
struct NameCorpus {
    Vocabulary vocab;
    std::vector<EntityRecord> entities;
};

inline NameCorpus make_name_corpus(std::size_t n_entities, std::uint64_t seed, std::size_t common_pool = 30,
                                   std::size_t head_pool = 80, std::size_t tail_pool = 80) {
    require(n_entities >= 1, ErrorKind::kInvalidArgument, "name corpus needs entities");
    require(common_pool >= 2 && head_pool >= 1 && tail_pool >= 2, ErrorKind::kInvalidArgument,
            "name corpus pools too small");
    Rng rng(derive_seed(seed, "names"));
    detail::SyllableSource src(2 * common_pool + head_pool + tail_pool, rng);
    std::vector<std::string> first, second, heads, tails;
    std::vector<std::string> tokens{"[UNK]"};
    for (std::size_t i = 0; i < common_pool; ++i) first.push_back(src.next());
    for (std::size_t i = 0; i < common_pool; ++i) second.push_back(src.next());
    for (std::size_t i = 0; i < head_pool; ++i) heads.push_back(src.next());
    for (std::size_t i = 0; i < tail_pool; ++i) tails.push_back(src.next());
    for (const auto* pool : {&first, &second, &heads}) tokens.insert(tokens.end(), pool->begin(), pool->end());
    for (const auto& t : tails) tokens.push_back("##" + t);

    const std::size_t capacity = common_pool * common_pool * head_pool * tail_pool * tail_pool;
    require(n_entities <= capacity / 2, ErrorKind::kInvalidArgument, "name corpus pools too small for n_entities");

    NameCorpus corpus{Vocabulary(tokens), {}};
    std::set<std::string> names;
    while (corpus.entities.size() < n_entities) {
        std::string rare = heads[rng.uniform_int(0, head_pool - 1)];
        const std::size_t t1 = rng.uniform_int(0, tail_pool - 1);
        rare += tails[t1];
        if (rng.uniform_int(0, 1) == 1) {
            std::size_t t2 = rng.uniform_int(0, tail_pool - 2);
            if (t2 >= t1) ++t2;
            rare += tails[t2];
        }
        std::string name = first[rng.uniform_int(0, common_pool - 1)] + ' ' +
                           second[rng.uniform_int(0, common_pool - 1)] + ' ' + rare;
        if (!names.insert(name).second) continue;
        char id[32];
        std::snprintf(id, sizeof(id), "N%06zu", corpus.entities.size());
        corpus.entities.push_back({id, std::move(name)});
    }
    return corpus;
}

}  // namespace ger
