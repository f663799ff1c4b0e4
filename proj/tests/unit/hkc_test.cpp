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

#include <set>
#include <string>
#include <vector>

#include "gercodes/hkc.hpp"
#include "gercodes/rng.hpp"

namespace ger {
namespace {

Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& x : m.data()) x = rng.normal();
    return m;
}

TEST(KMeans, PlantedTwoBlobs) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 10 + rng.uniform_int(0, 90);
        Matrix pts(n, 3);
        std::vector<int> truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform_int(0, 1);
            for (std::size_t j = 0; j < 3; ++j) pts(i, j) = (truth[i] ? 50.0 : -50.0) + 0.1 * rng.normal();
        }
        if (std::set<int>(truth.begin(), truth.end()).size() < 2) continue;
        const auto r = kmeans(pts, {2, static_cast<std::uint64_t>(trial), 100, 1e-9});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                EXPECT_EQ(truth[i] == truth[j], r.assignments[i] == r.assignments[j]);
            }
        }
    }
}

TEST(KMeans, InertiaNeverIncreases) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = 1 + rng.uniform_int(0, 200);
        const auto pts = gaussian(rng, n, 1 + rng.uniform_int(0, 7));
        const auto k = static_cast<std::uint32_t>(1 + rng.uniform_int(0, 9));
        const auto r = kmeans(pts, {k, static_cast<std::uint64_t>(trial), 50, 0.0});
        ASSERT_FALSE(r.inertia_history.empty());
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1 + 1e-12) + 1e-12);
        }
        // Each point sits with its nearest centroid.
        for (std::size_t i = 0; i < n; ++i) {
            const double own = squared_distance(pts.row(i), r.centroids.row(r.assignments[i]));
            for (std::size_t c = 0; c < r.centroids.rows(); ++c) {
                EXPECT_LE(own, squared_distance(pts.row(i), r.centroids.row(c)) + 1e-12);
            }
        }
    }
}

TEST(KMeans, KLargerThanRowsShrinks) {
    Matrix pts(2, 2);
    pts(1, 0) = 1.0;
    const auto r = kmeans(pts, {5, 0, 10, 1e-4});
    EXPECT_EQ(r.centroids.rows(), 2u);
    EXPECT_NEAR(r.inertia(), 0.0, 1e-15);
    EXPECT_THROW(kmeans(Matrix(0, 2), {2, 0, 10, 1e-4}), Error);
}

// 3 top groups x 3 subgroups x `leaf` points, on mutually orthogonal axes.
EmbeddingMatrix planted_hierarchy(Rng& rng, std::size_t leaf, std::vector<std::pair<int, int>>& truth) {
    const std::size_t dim = 3 + 9;
    EmbeddingMatrix emb;
    emb.vectors = Matrix(9 * leaf, dim);
    std::size_t row = 0;
    for (int top = 0; top < 3; ++top) {
        for (int sub = 0; sub < 3; ++sub) {
            for (std::size_t i = 0; i < leaf; ++i, ++row) {
                emb.ids.push_back("E" + std::to_string(1000 + row));
                emb.vectors(row, top) = 10.0;
                emb.vectors(row, 3 + 3 * top + sub) = 3.0;
                for (std::size_t j = 0; j < dim; ++j) emb.vectors(row, j) += 0.01 * rng.normal();
                truth.emplace_back(top, sub);
            }
        }
    }
    return emb;
}

TEST(Hkc, SiblingsSharePrefixes) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::pair<int, int>> truth;
        const auto emb = planted_hierarchy(rng, 2 + trial % 5, truth);
        const auto res = build_hkc(emb, {3, 4, static_cast<std::uint64_t>(trial), 100, 1e-6});
        const auto& book = res.book;
        EXPECT_NO_THROW(book.validate());
        for (std::size_t a = 0; a < truth.size(); ++a) {
            for (std::size_t b = 0; b < truth.size(); ++b) {
                const auto& ca = book.code(a).values;
                const auto& cb = book.code(b).values;
                EXPECT_EQ(truth[a].first == truth[b].first, ca[0] == cb[0]);
                if (truth[a].first == truth[b].first) {
                    EXPECT_EQ(truth[a].second == truth[b].second, ca[1] == cb[1]);
                }
            }
        }
        for (const auto& c : book.codes()) {
            for (auto v : c.values) {
                EXPECT_GE(v, 1u);
                EXPECT_LE(v, 4u);
            }
        }
    }
}

TEST(Hkc, DeterministicAndPadded) {
    Rng rng(4);
    EmbeddingMatrix emb;
    emb.vectors = gaussian(rng, 300, 6);
    for (std::size_t i = 0; i < 300; ++i) emb.ids.push_back("Q" + std::to_string(i));
    const auto a = build_hkc_codes(emb, 4, 5, 9);
    EXPECT_EQ(a, build_hkc_codes(emb, 4, 5, 9));
    EXPECT_EQ(a.vocab_size(), 5u);
    std::set<std::vector<TokenValue>> seen;
    for (const auto& c : a.codes()) {
        EXPECT_EQ(c.values.size(), a.max_length());
        EXPECT_TRUE(seen.insert(c.values).second);
    }
}

TEST(Hkc, WideLeafUsesMoreSlots) {
    // Identical points cannot be split by k-means; depth 0 stops at the root, k = 3.
    EmbeddingMatrix emb;
    emb.vectors = Matrix(9, 2, 1.0);
    for (int i = 0; i < 9; ++i) emb.ids.push_back("Q" + std::to_string(i));
    auto book = build_hkc_codes(emb, 3, 0, 0);
    std::set<std::vector<TokenValue>> seen;
    for (const auto& c : book.codes()) {
        EXPECT_EQ(c.values.size(), 2u);
        EXPECT_TRUE(seen.insert(c.values).second);
    }
    EXPECT_EQ(book.code(0).values, (std::vector<TokenValue>{1, 1}));
    EXPECT_EQ(book.code(8).values, (std::vector<TokenValue>{3, 3}));

    emb.vectors = Matrix(10, 2, 1.0);
    emb.ids.push_back("Q9");
    book = build_hkc_codes(emb, 3, 0, 0);
    EXPECT_NO_THROW(book.validate());
    EXPECT_EQ(book.code(9).values, (std::vector<TokenValue>{2, 1, 1}));
    for (const auto& c : book.codes()) EXPECT_EQ(c.values.size(), 3u);
}

TEST(Hkc, CoincidentPointsSplitById) {
    EmbeddingMatrix emb;
    emb.vectors = Matrix(20, 3, 2.0);
    for (int i = 0; i < 20; ++i) emb.ids.push_back("Q" + std::to_string(100 + i));
    const auto book = build_hkc_codes(emb, 2, 6, 0);
    EXPECT_NO_THROW(book.validate());
}

}  // namespace
}  // namespace ger
