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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "gercodes/tinyger.hpp"
#include "support/oracles.hpp"

namespace ger {
namespace {

ModelConfig small_config(std::uint32_t vocab = 5, std::uint32_t max_len = 3) {
    ModelConfig c;
    c.vocab_size = vocab;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.query_dim = 3;
    c.n_query = 1;
    c.max_len = max_len;
    c.seed = 1;
    return c;
}

TEST(TinyGer, ZeroOutputGivesUniformLoss) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    for (auto& x : m.tensor(m.layout().w_out)) x = 0.0;
    for (auto& x : m.tensor(m.layout().b_out)) x = 0.0;
    Rng rng(1);
    const TrainingExample ex{oracle::random_query(cfg, rng), {1, 2, 3}};
    for (double ls : {0.0, 0.1, 0.3}) {
        EXPECT_NEAR(forward_loss(m, ex, ls).loss, std::log(static_cast<double>(cfg.classes())), 1e-12);
    }
}

TEST(TinyGer, SmoothedCrossEntropyHandCase) {
    // Two positions, three classes.
    const std::vector<double> logits{0.0, 0.0, 0.0, 1.0, 2.0, 3.0};
    const std::vector<TokenValue> target{1, 2};
    const double ls = 0.3;
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    const double row0 = std::log(3.0);
    double row1 = 0.0;
    const double logp[3] = {1.0 - lse, 2.0 - lse, 3.0 - lse};
    for (int j = 0; j < 3; ++j) row1 -= (ls / 3 + (j == 2 ? 1 - ls : 0.0)) * logp[j];
    std::vector<double> grad;
    const double loss = smoothed_cross_entropy(logits, 3, target, ls, &grad);
    EXPECT_NEAR(loss, (row0 + row1) / 2, 1e-14);
    EXPECT_NEAR(grad[0], (1.0 / 3 - 0.1) / 2, 1e-14);
    EXPECT_NEAR(grad[1], (1.0 / 3 - 0.8) / 2, 1e-14);
    for (int r = 0; r < 2; ++r) {
        EXPECT_NEAR(grad[3 * r] + grad[3 * r + 1] + grad[3 * r + 2], 0.0, 1e-15);
    }
}

struct FdCase {
    std::uint32_t vocab, d, heads, layers, ff, qdim, nq, len;
};

class GradientCheck : public ::testing::TestWithParam<FdCase> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
    const auto p = GetParam();
    ModelConfig cfg{p.vocab, p.d, p.layers, p.heads, p.ff, p.qdim, p.nq, p.len, 7};
    Rng rng(p.vocab * 31 + p.d);
    const auto model = oracle::random_model(cfg, rng);
    std::vector<TokenValue> target(p.len);
    for (auto& v : target) v = static_cast<TokenValue>(rng.uniform_int(1, p.vocab + 1));
    const TrainingExample ex{oracle::random_query(cfg, rng), target};
    const auto r = oracle::gradient_check(model, ex, 0.1);
    EXPECT_EQ(r.checked, model.params().size());
    EXPECT_LT(r.max_rel_error, 1e-4) << "worst parameter " << r.worst_index;
}

INSTANTIATE_TEST_SUITE_P(Configs, GradientCheck,
                         ::testing::Values(FdCase{5, 8, 2, 1, 0, 3, 1, 3}, FdCase{7, 6, 3, 2, 10, 4, 2, 4},
                                           FdCase{3, 4, 1, 2, 6, 2, 3, 2}));

TEST(TinyGer, ConfidentCorrectModelHasNoGradient) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    for (auto& x : m.tensor(m.layout().w_out)) x = 0.0;
    m.tensor(m.layout().b_out)[1] = 60.0;
    Rng rng(2);
    const TrainingExample ex{oracle::random_query(cfg, rng), {1, 1, 1}};
    EXPECT_LT(forward_loss(m, ex, 0.0).loss, 1e-20);
    for (double x : backward(m, ex, 0.0)) EXPECT_NEAR(x, 0.0, 1e-20);
}

TEST(TinyGer, BatchNormalizer) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    Rng rng(3);
    std::vector<TrainingExample> data{{oracle::random_query(cfg, rng), {1, 2, 3}}};
    const std::vector<std::size_t> one{0}, two{0, 0};
    std::vector<double> g1, g2, g_mean;
    batch_gradient(m, data, one, 0.1, g1);
    batch_gradient(m, data, two, 0.1, g2, 1, 1.0);
    batch_gradient(m, data, two, 0.1, g_mean);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        EXPECT_NEAR(g2[i], 2.0 * g1[i], 1e-12);
        EXPECT_NEAR(g_mean[i], g1[i], 1e-12);
    }
}

std::vector<TrainingExample> toy_data(const ModelConfig& cfg, std::size_t n, Rng& rng) {
    std::vector<TrainingExample> data;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<TokenValue> code(cfg.max_len);
        for (auto& v : code) v = static_cast<TokenValue>(rng.uniform_int(1, cfg.vocab_size));
        data.push_back({oracle::random_query(cfg, rng), code});
    }
    return data;
}

TEST(TinyGer, ThreadCountDoesNotChangeGradients) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    Rng rng(4);
    const auto data = toy_data(cfg, 16, rng);
    std::vector<std::size_t> batch(16);
    for (std::size_t i = 0; i < 16; ++i) batch[i] = i;
    std::vector<double> a, b;
    batch_gradient(m, data, batch, 0.1, a, 1);
    batch_gradient(m, data, batch, 0.1, b, 4);
    EXPECT_EQ(a, b);
}

TEST(TinyGer, ZeroLearningRateLeavesParameters) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    const auto before = m.params();
    Rng rng(5);
    const auto data = toy_data(cfg, 8, rng);
    TrainOptions opts;
    opts.steps = 5;
    opts.lr = 0.0;
    train(m, data, opts);
    EXPECT_EQ(m.params(), before);
}

TEST(TinyGer, TrainingIsDeterministic) {
    auto cfg = small_config();
    Rng rng(6);
    const auto data = toy_data(cfg, 20, rng);
    TrainOptions opts;
    opts.steps = 30;
    opts.batch_size = 4;
    opts.seed = 3;
    TinyGerModel a(cfg), b(cfg);
    const auto ra = train(a, data, opts);
    opts.threads = 3;
    const auto rb = train(b, data, opts);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ra.loss_curve, rb.loss_curve);
}

TEST(TinyGer, MemorizesFiftyEntities) {
    ModelConfig cfg;
    cfg.vocab_size = 20;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.query_dim = 16;
    cfg.max_len = 2;
    cfg.seed = 2;
    Rng rng(7);
    auto data = toy_data(cfg, 50, rng);
    TinyGerModel m(cfg);
    TrainOptions opts;
    opts.steps = 2000;
    opts.batch_size = 16;
    opts.label_smoothing = 0.0;
    opts.threads = 4;
    const auto r = train(m, data, opts);
    std::vector<std::size_t> all(50);
    for (std::size_t i = 0; i < 50; ++i) all[i] = i;
    std::vector<double> g;
    const double initial = r.loss_curve.front();
    const double final_loss = batch_gradient(m, data, all, 0.0, g);
    EXPECT_LT(final_loss, 0.1 * initial);
}

TEST(TinyGer, DivergenceAborts) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    Rng rng(8);
    const auto data = toy_data(cfg, 8, rng);
    TrainOptions opts;
    opts.steps = 2000;
    opts.lr = 1e3;
    opts.momentum = 0.99;
    try {
        train(m, data, opts);
        FAIL() << "expected divergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDiverged);
    }
}

TEST(TinyGer, DivergenceWindowCountsConsecutiveSteps) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    Rng rng(8);
    const auto data = toy_data(cfg, 8, rng);
    TrainOptions opts;
    opts.steps = 10;
    opts.lr = 0.0;
    opts.batch_size = 8;
    opts.divergence_factor = 0.5;  // a constant loss sits above half of itself
    opts.divergence_window = 3;
    try {
        train(m, data, opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDiverged);
        EXPECT_NE(std::string(e.what()).find("(step 2)"), std::string::npos) << e.what();
    }
    opts.divergence_window = 11;
    EXPECT_EQ(train(m, data, opts).loss_curve.size(), 10u);
}

TEST(TinyGer, LogitsAreCausal) {
    auto cfg = small_config(6, 4);
    Rng rng(9);
    const auto m = oracle::random_model(cfg, rng);
    const auto q = oracle::random_query(cfg, rng);
    ForwardCache a, b;
    forward_logits(m, q, std::vector<TokenValue>{0, 1, 2, 3}, a);
    forward_logits(m, q, std::vector<TokenValue>{0, 1, 5, 6}, b);
    const std::size_t K = cfg.classes();
    for (std::size_t i = 0; i < 2 * K; ++i) EXPECT_EQ(a.logits[i], b.logits[i]);
    bool changed = false;
    for (std::size_t i = 2 * K; i < 3 * K; ++i) changed |= a.logits[i] != b.logits[i];
    EXPECT_TRUE(changed);

    std::vector<double> logp(K);
    nn::log_softmax(std::span<const double>(a.logits).subspan(0, K), logp);
    double sum = 0.0;
    for (double x : logp) sum += std::exp(x);
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(TinyGer, IncrementalDecodeMatchesFullForward) {
    auto cfg = small_config(6, 4);
    cfg.n_layers = 2;
    cfg.n_query = 2;
    Rng rng(10);
    const auto m = oracle::random_model(cfg, rng);
    const auto q = oracle::random_query(cfg, rng);
    const std::vector<TokenValue> inputs{0, 4, 2, 7};
    ForwardCache full;
    forward_logits(m, q, inputs, full);
    auto st = start_decoding(m, q);
    DecodeStats stats;
    const std::size_t K = cfg.classes();
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const auto logits = decode_step(m, st, inputs[t], &stats);
        for (std::size_t j = 0; j < K; ++j) EXPECT_NEAR(logits[j], full.logits[t * K + j], 1e-10);
    }
    // Step t attends to n_query + t + 1 positions in each layer and head.
    std::uint64_t expect = 0;
    for (std::size_t t = 0; t < inputs.size(); ++t) expect += (cfg.n_query + t + 1) * cfg.n_layers * cfg.n_heads;
    EXPECT_EQ(stats.attention_dots, expect);
    EXPECT_THROW(decode_step(m, st, 1), Error);
}

TEST(TinyGer, BeamMatchesBruteForce) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = small_config(4, 3);
        cfg.seed = trial;
        const auto m = oracle::random_model(cfg, rng, 0.5);
        const auto q = oracle::random_query(cfg, rng);
        BeamOptions opts;
        opts.beam_width = 36;  // (V + 2)^2 keeps every prefix
        opts.max_len = 3;
        const auto hyps = beam_decode(m, q, opts);
        const auto best = oracle::best_sequence(m, q, 3);
        ASSERT_FALSE(hyps.empty());
        EXPECT_EQ(hyps.front().code, best.code);
        EXPECT_NEAR(hyps.front().log_prob, best.log_prob, 1e-10);
        for (std::size_t i = 1; i < hyps.size(); ++i) EXPECT_FALSE(ranks_before(hyps[i], hyps[i - 1]));
    }
}

TEST(TinyGer, BeamWidthOneIsGreedy) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = small_config(6, 4);
        const auto m = oracle::random_model(cfg, rng, 0.5);
        const auto q = oracle::random_query(cfg, rng);
        BeamOptions opts;
        opts.beam_width = 1;
        opts.max_len = 4;
        const auto beam = beam_decode(m, q, opts);
        const auto greedy = greedy_decode(m, q, 4);
        ASSERT_EQ(beam.size(), 1u);
        EXPECT_EQ(beam.front().code, greedy.code);
        EXPECT_NEAR(beam.front().log_prob, greedy.log_prob, 1e-10);
    }
}

TEST(TinyGer, ConstrainedBeamStaysInTrie) {
    auto cfg = small_config(6, 3);
    Rng rng(13);
    const auto m = oracle::random_model(cfg, rng, 0.5);
    const std::vector<std::vector<TokenValue>> one{{3, 1, 6}};
    const auto single = CodeTrie::build(std::vector<std::span<const TokenValue>>(one.begin(), one.end()));
    BeamOptions opts;
    opts.max_len = 3;
    opts.trie = &single;
    for (int i = 0; i < 10; ++i) {
        const auto hyps = beam_decode(m, oracle::random_query(cfg, rng), opts);
        ASSERT_EQ(hyps.size(), 1u);
        EXPECT_EQ(hyps.front().code, one.front());
    }

    std::vector<std::vector<TokenValue>> codes;
    for (int i = 0; i < 30; ++i) codes.push_back({static_cast<TokenValue>(1 + i % 6), static_cast<TokenValue>(1 + i / 6), 2});
    const auto trie = CodeTrie::build(std::vector<std::span<const TokenValue>>(codes.begin(), codes.end()));
    opts.trie = &trie;
    opts.beam_width = 5;
    for (int i = 0; i < 10; ++i) {
        for (const auto& h : beam_decode(m, oracle::random_query(cfg, rng), opts)) {
            EXPECT_TRUE(trie.resolve(h.code).has_value());
        }
    }
}

TEST(TinyGer, EndTokenStopsHypotheses) {
    auto cfg = small_config(3, 4);
    TinyGerModel m(cfg);
    for (auto& x : m.tensor(m.layout().w_out)) x = 0.0;
    auto b = m.tensor(m.layout().b_out);
    std::fill(b.begin(), b.end(), 0.0);
    b[4] = 10.0;  // V + 1 dominates
    BeamOptions opts;
    opts.end_token = 4;
    opts.max_len = 4;
    Rng rng(14);
    const auto hyps = beam_decode(m, oracle::random_query(cfg, rng), opts);
    EXPECT_EQ(hyps.front().code, std::vector<TokenValue>{4});
}

TEST(TinyGer, CheckpointRoundTrip) {
    auto cfg = small_config(9, 4);
    cfg.seed = 0x1234567890ULL;
    Rng rng(15);
    const auto m = oracle::random_model(cfg, rng);
    std::stringstream s;
    save_checkpoint(s, m);
    EXPECT_EQ(load_checkpoint(s), m);

    const auto path = (std::filesystem::temp_directory_path() / "gercodes_model.bin").string();
    save_checkpoint(path, m);
    EXPECT_EQ(load_checkpoint(path), m);
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    EXPECT_THROW(load_checkpoint(path), Error);
    EXPECT_THROW(load_checkpoint("/nonexistent/model.bin"), Error);
}

TEST(TinyGer, RejectsBadInputs) {
    auto cfg = small_config();
    TinyGerModel m(cfg);
    Rng rng(16);
    const auto q = oracle::random_query(cfg, rng);
    EXPECT_THROW(forward_loss(m, {q, {}}, 0.1), Error);
    EXPECT_THROW(forward_loss(m, {q, {1, 2, 3, 4}}, 0.1), Error);
    EXPECT_THROW(forward_loss(m, {q, {0}}, 0.1), Error);
    EXPECT_THROW(forward_loss(m, {q, {7}}, 0.1), Error);
    EXPECT_THROW(forward_loss(m, {q, {1}}, 1.0), Error);
    EXPECT_THROW(forward_loss(m, {Matrix(2, 3), {1}}, 0.1), Error);
    cfg.n_heads = 3;
    EXPECT_THROW(TinyGerModel{cfg}, Error);
}

}  // namespace
}  // namespace ger
