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
#include <chrono>
#include <set>
#include <vector>

#include "gercodes/codetrie.hpp"
#include "gercodes/rng.hpp"

namespace ger {
namespace {

using Codes = std::vector<std::vector<TokenValue>>;

std::vector<std::span<const TokenValue>> spans(const Codes& codes) {
    return {codes.begin(), codes.end()};
}

Codes random_codes(Rng& rng, std::size_t n, std::uint32_t vocab, std::size_t min_len, std::size_t max_len) {
    std::set<std::vector<TokenValue>> seen;
    Codes out;
    while (out.size() < n) {
        std::vector<TokenValue> c(rng.uniform_int(min_len, max_len));
        for (auto& v : c) v = static_cast<TokenValue>(rng.uniform_int(1, vocab));
        if (seen.insert(c).second) out.push_back(c);
    }
    return out;
}

std::vector<TokenValue> brute_allowed(const Codes& codes, const std::vector<TokenValue>& prefix) {
    std::set<TokenValue> next;
    for (const auto& c : codes) {
        if (c.size() > prefix.size() && std::equal(prefix.begin(), prefix.end(), c.begin())) next.insert(c[prefix.size()]);
    }
    return {next.begin(), next.end()};
}

std::optional<std::size_t> brute_resolve(const Codes& codes, const std::vector<TokenValue>& code) {
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] == code) return i;
    }
    return std::nullopt;
}

TEST(CodeTrie, MatchesBruteForce) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto vocab = static_cast<std::uint32_t>(2 + rng.uniform_int(0, 100));
        const auto codes = random_codes(rng, 1 + rng.uniform_int(0, 150), vocab, 1, 4);
        const auto threshold = static_cast<std::uint32_t>(rng.uniform_int(0, 1) ? 4 : 1000);
        const auto trie = CodeTrie::build(spans(codes), threshold);
        EXPECT_EQ(trie.terminal_count(), codes.size());
        for (int probe = 0; probe < 200; ++probe) {
            std::vector<TokenValue> q;
            if (probe % 2 == 0) {
                const auto& c = codes[rng.uniform_int(0, codes.size() - 1)];
                q.assign(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(rng.uniform_int(0, c.size())));
            } else {
                q.resize(rng.uniform_int(0, 4));
                for (auto& v : q) v = static_cast<TokenValue>(rng.uniform_int(0, vocab + 2));
            }
            EXPECT_EQ(trie.allowed_next(q), brute_allowed(codes, q));
            EXPECT_EQ(trie.resolve(q), brute_resolve(codes, q));
        }
    }
}

TEST(CodeTrie, DenseAndSparseAgree) {
    Codes codes;
    for (TokenValue a = 1; a <= 100; ++a) {
        for (TokenValue b = 1; b <= 3; ++b) codes.push_back({a, b * 7});
    }
    const auto dense = CodeTrie::build(spans(codes), 64);
    const auto sparse = CodeTrie::build(spans(codes), 1000);
    EXPECT_GE(dense.dense_node_count(), 1u);
    EXPECT_EQ(sparse.dense_node_count(), 0u);
    for (TokenValue a = 0; a <= 102; ++a) {
        EXPECT_EQ(dense.allowed_next(std::vector<TokenValue>{a}), sparse.allowed_next(std::vector<TokenValue>{a}));
        for (TokenValue b = 0; b <= 22; ++b) {
            EXPECT_EQ(dense.resolve(std::vector<TokenValue>{a, b}), sparse.resolve(std::vector<TokenValue>{a, b}));
        }
    }
    EXPECT_TRUE(dense.prefix_free());
}

TEST(CodeTrie, PrefixCodesAndDuplicates) {
    const Codes codes{{1}, {1, 2}, {3}};
    const auto trie = CodeTrie::build(spans(codes));
    EXPECT_FALSE(trie.prefix_free());
    EXPECT_EQ(trie.resolve(std::vector<TokenValue>{1}), 0u);
    EXPECT_EQ(trie.resolve(std::vector<TokenValue>{1, 2}), 1u);
    EXPECT_EQ(trie.allowed_next(std::vector<TokenValue>{}), (std::vector<TokenValue>{1, 3}));

    const Codes dup{{1, 2}, {3, 4}, {1, 2}};
    try {
        CodeTrie::build(spans(dup));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDuplicateCode);
    }
    EXPECT_FALSE(CodeTrie().resolve(std::vector<TokenValue>{1}).has_value());
}

TEST(CodeTrie, ResolvesIdsFromBook) {
    CodeBook book(Scheme::kAtomic, {2, 5, 0});
    book.add("Qa", Code{{1, 2}, {}});
    book.add("Qb", Code{{2, 1}, {}});
    const auto trie = CodeTrie::build(book);
    EXPECT_EQ(trie.resolve_id(std::vector<TokenValue>{2, 1}), "Qb");
    EXPECT_FALSE(trie.resolve_id(std::vector<TokenValue>{2, 2}).has_value());
}

// Six million length-4 codes; run explicitly.
TEST(CodeTrie, DISABLED_LargeTrieSixMillion) {
    constexpr std::size_t n = 6'000'000;
    auto code_of = [](std::size_t i) {
        // 2654435761 is odd, so i -> i * m mod 10^8 is a bijection.
        std::uint64_t x = (static_cast<std::uint64_t>(i) * 2654435761ULL) % 100'000'000ULL;
        std::vector<TokenValue> c(4);
        for (int p = 3; p >= 0; --p) {
            c[p] = static_cast<TokenValue>(x % 100 + 1);
            x /= 100;
        }
        return c;
    };
    Codes codes(n);
    for (std::size_t i = 0; i < n; ++i) codes[i] = code_of(i);
    const auto t0 = std::chrono::steady_clock::now();
    const auto trie = CodeTrie::build(spans(codes));
    const auto t1 = std::chrono::steady_clock::now();
    EXPECT_EQ(trie.terminal_count(), n);
    Rng rng(9);
    for (int probe = 0; probe < 100000; ++probe) {
        const auto i = rng.uniform_int(0, n - 1);
        ASSERT_EQ(trie.resolve(codes[i]), i);
    }
    const auto t2 = std::chrono::steady_clock::now();
    std::printf("build %.2fs, 1e5 lookups %.3fs, %zu nodes\n", std::chrono::duration<double>(t1 - t0).count(),
                std::chrono::duration<double>(t2 - t1).count(), trie.node_count());
}

}  // namespace
}  // namespace ger
