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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "gercodes/experiment.hpp"

namespace ger {
namespace {

TEST(Config, RoundTrip) {
    ExperimentConfig c;
    c.scheme = Scheme::kHkc;
    c.length = 3;
    c.train.lr = 0.0123456789;
    c.task.sigma = 0.1;
    c.constrained = true;
    c.seed = 99;
    const auto text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text);
}

TEST(Config, ParseErrorsNameLines) {
    try {
        parse_config("steps = 10\n# comment\nbogus = 1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kParse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_THROW(parse_config("steps = ten"), Error);
    EXPECT_THROW(parse_config("steps"), Error);
    const auto c = parse_config("  L = 6   # trailing\n\nconstrained = true\n");
    EXPECT_EQ(c.length, 6u);
    EXPECT_TRUE(c.constrained);
}

TEST(SyntheticTask, ShapeAndSplits) {
    SyntheticTaskOptions o;
    o.n_entities = 200;
    o.n_families = 10;
    o.dim = 8;
    const auto t = make_synthetic_task(o);
    ASSERT_EQ(t.entities.size(), 200u);
    EXPECT_EQ(t.concepts.rows(), 200u);
    std::set<std::string> names;
    std::size_t unseen = 0;
    for (std::size_t e = 0; e < 200; ++e) {
        EXPECT_TRUE(names.insert(t.entities[e].name).second);
        unseen += t.unseen[e];
    }
    EXPECT_EQ(unseen, 10u * 4);  // floor(0.2 * 20) per family
    for (const auto& q : t.train) EXPECT_FALSE(t.unseen[q.entity]);
    for (const auto& q : t.seen_test) EXPECT_FALSE(t.unseen[q.entity]);
    for (const auto& q : t.unseen_test) EXPECT_TRUE(t.unseen[q.entity]);
    EXPECT_EQ(t.train.size(), 160u * 15);
    EXPECT_EQ(t.seen_test.size(), 160u * 5);
    EXPECT_EQ(t.unseen_test.size(), 40u * 20);

    const auto again = make_synthetic_task(o);
    EXPECT_EQ(again.concepts, t.concepts);
    o.seed = 1;
    EXPECT_NE(make_synthetic_task(o).concepts, t.concepts);
}

TEST(SyntheticTask, RelatedEntitiesShareTokens) {
    SyntheticTaskOptions o;
    o.n_entities = 100;
    o.n_families = 5;
    o.dim = 4;
    const auto t = make_synthetic_task(o);
    for (std::size_t a = 0; a < 100; ++a) {
        for (std::size_t b = a + 1; b < 100; ++b) {
            const auto ta = tokenize(t.vocab, t.entities[a].name).values;
            const auto tb = tokenize(t.vocab, t.entities[b].name).values;
            const bool share = std::find_first_of(ta.begin(), ta.end(), tb.begin(), tb.end()) != ta.end();
            EXPECT_EQ(share, t.family[a] == t.family[b]);
        }
    }
    for (const auto& e : t.entities) {
        const auto tok = tokenize(t.vocab, e.name);
        if (const auto unk = t.vocab.unknown_value()) {
            EXPECT_EQ(std::count(tok.values.begin(), tok.values.end(), *unk), 0);
        }
    }
}

TEST(NameCorpus, DistinctNamesWithEnoughTokens) {
    const auto c = make_name_corpus(2000, 3);
    std::set<std::string> names;
    for (const auto& e : c.entities) {
        EXPECT_TRUE(names.insert(e.name).second);
        EXPECT_GE(tokenize(c.vocab, e.name).values.size(), 4u);
    }
}

TEST(Experiment, SmallRunIsDeterministic) {
    ExperimentConfig c;
    c.task.n_entities = 60;
    c.task.n_families = 6;
    c.task.dim = 8;
    c.d_model = 8;
    c.length = 2;
    c.train.steps = 40;
    c.train.batch_size = 8;
    const auto a = run_experiment(c);
    c.threads = 2;
    const auto b = run_experiment(c);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.report.seen_top1, b.report.seen_top1);
    EXPECT_EQ(a.report.unseen_top1, b.report.unseen_top1);
    c.constrained = true;
    const auto r = evaluate_model(a.model, make_synthetic_task(c.task), a.book, {3, true});
    EXPECT_DOUBLE_EQ(r.valid_code_rate, 1.0);
}

TEST(Experiment, EverySchemeRuns) {
    ExperimentConfig c;
    c.task.n_entities = 40;
    c.task.n_families = 4;
    c.task.dim = 6;
    c.d_model = 8;
    c.train.steps = 5;
    c.hkc_k = 4;
    const auto task = make_synthetic_task(c.task);
    for (Scheme s : {Scheme::kAld, Scheme::kAtomic, Scheme::kCaption, Scheme::kHkc}) {
        c.scheme = s;
        c.length = s == Scheme::kAtomic ? 2 : 4;
        const auto r = run_experiment(c, task);
        EXPECT_GE(r.report.hm, 0.0) << to_string(s);
        EXPECT_NO_THROW(r.book.validate());
    }
}

TEST(Median, OddAndEven) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_THROW(median({}), Error);
}

}  // namespace
}  // namespace ger
