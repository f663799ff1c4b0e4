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

// Immutable prefix trie over a code book. Nodes are laid out breadth-first so
// the children of a node occupy a contiguous, label-sorted index range.
// Nodes whose fan-out exceeds a threshold also get a dense value -> child
// table.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gercodes/codebook.hpp"
#include "gercodes/error.hpp"

namespace ger {

class CodeTrie {
   public:
    using NodeId = std::uint32_t;
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    static constexpr std::uint32_t kDefaultDenseThreshold = 64;

    CodeTrie() = default;

    // Terminal of codes[i] is annotated with i. Throws kDuplicateCode.
    static CodeTrie build(std::span<const std::span<const TokenValue>> codes,
                          std::uint32_t dense_threshold = kDefaultDenseThreshold) {
        CodeTrie trie;
        trie.build_impl(codes, dense_threshold);
        return trie;
    }

    static CodeTrie build(const CodeBook& book, std::uint32_t dense_threshold = kDefaultDenseThreshold) {
        std::vector<std::span<const TokenValue>> codes;
        codes.reserve(book.size());
        for (const auto& c : book.codes()) codes.emplace_back(c.values);
        CodeTrie trie;
        try {
            trie.build_impl(codes, dense_threshold);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kDuplicateCode) throw;
            throw Error(e.kind(), std::string(e.what()) + " (entity '" + book.id(trie.duplicate_) + "')");
        }
        trie.ids_ = book.ids();
        return trie;
    }

    NodeId root() const noexcept { return 0; }
    std::size_t node_count() const noexcept { return label_.size(); }
    std::size_t terminal_count() const noexcept { return terminals_; }
    std::size_t dense_node_count() const noexcept { return dense_nodes_; }
    bool prefix_free() const noexcept { return prefix_free_; }

    // Sorted values that continue the path at `node`.
    std::span<const TokenValue> next_values(NodeId node) const {
        return {label_.data() + first_child_[node], child_count_[node]};
    }

    std::optional<NodeId> child(NodeId node, TokenValue value) const {
        if (dense_index_[node] != kNone) {
            if (value > max_value_) return std::nullopt;
            const auto c = dense_pool_[static_cast<std::size_t>(dense_index_[node]) * (max_value_ + 1) + value];
            if (c == kNone) return std::nullopt;
            return c;
        }
        const auto labels = next_values(node);
        const auto it = std::lower_bound(labels.begin(), labels.end(), value);
        if (it == labels.end() || *it != value) return std::nullopt;
        return static_cast<NodeId>(first_child_[node] + (it - labels.begin()));
    }

    std::optional<NodeId> walk(std::span<const TokenValue> prefix) const {
        if (label_.empty()) return std::nullopt;
        NodeId node = root();
        for (TokenValue v : prefix) {
            const auto next = child(node, v);
            if (!next) return std::nullopt;
            node = *next;
        }
        return node;
    }

    // Continuations of `prefix` that lead to at least one stored code; empty
    // when the prefix is not a path in the trie.
    std::vector<TokenValue> allowed_next(std::span<const TokenValue> prefix) const {
        const auto node = walk(prefix);
        if (!node) return {};
        const auto values = next_values(*node);
        return {values.begin(), values.end()};
    }

    std::optional<std::size_t> terminal(NodeId node) const {
        if (terminal_[node] == kNone) return std::nullopt;
        return terminal_[node];
    }

    // Index of the entity whose code is exactly `code`.
    std::optional<std::size_t> resolve(std::span<const TokenValue> code) const {
        const auto node = walk(code);
        if (!node) return std::nullopt;
        return terminal(*node);
    }

    // Entity id for `code`; only available on tries built from a CodeBook.
    std::optional<std::string> resolve_id(std::span<const TokenValue> code) const {
        const auto index = resolve(code);
        if (!index || *index >= ids_.size()) return std::nullopt;
        return ids_[*index];
    }

   private:
    void build_impl(std::span<const std::span<const TokenValue>> codes, std::uint32_t dense_threshold) {
        require(codes.size() < kNone, ErrorKind::kInvalidArgument, "too many codes for a 32-bit trie");
        std::vector<std::uint32_t> order(codes.size());
        for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        auto less = [&](std::uint32_t a, std::uint32_t b) {
            return std::lexicographical_compare(codes[a].begin(), codes[a].end(), codes[b].begin(), codes[b].end());
        };
        std::sort(order.begin(), order.end(), less);
        for (std::size_t i = 1; i < order.size(); ++i) {
            if (std::equal(codes[order[i - 1]].begin(), codes[order[i - 1]].end(), codes[order[i]].begin(),
                           codes[order[i]].end())) {
                duplicate_ = std::max(order[i - 1], order[i]);
                fail(ErrorKind::kDuplicateCode, "code stored twice in the trie");
            }
        }
        max_value_ = 0;
        for (const auto& c : codes) {
            for (TokenValue v : c) max_value_ = std::max(max_value_, v);
        }

        // Breadth-first: node n covers sorted range [lo_[n], hi_[n]) at depth_[n].
        std::vector<std::uint32_t> lo{0}, hi{static_cast<std::uint32_t>(order.size())}, depth{0};
        label_.assign(1, 0);
        terminal_.clear();
        first_child_.clear();
        child_count_.clear();
        terminals_ = 0;
        prefix_free_ = true;
        for (std::size_t n = 0; n < label_.size(); ++n) {
            std::uint32_t i = lo[n];
            const std::uint32_t end = hi[n];
            const std::uint32_t d = depth[n];
            std::uint32_t term = kNone;
            if (i < end && codes[order[i]].size() == d) {
                term = order[i];
                ++terminals_;
                ++i;
                if (i < end) prefix_free_ = false;
            }
            terminal_.push_back(term);
            first_child_.push_back(static_cast<std::uint32_t>(label_.size()));
            std::uint32_t count = 0;
            while (i < end) {
                const TokenValue v = codes[order[i]][d];
                std::uint32_t j = i + 1;
                while (j < end && codes[order[j]][d] == v) ++j;
                label_.push_back(v);
                lo.push_back(i);
                hi.push_back(j);
                depth.push_back(d + 1);
                ++count;
                i = j;
            }
            child_count_.push_back(count);
        }

        dense_index_.assign(label_.size(), kNone);
        dense_pool_.clear();
        dense_nodes_ = 0;
        for (std::size_t n = 0; n < label_.size(); ++n) {
            if (child_count_[n] <= dense_threshold) continue;
            dense_index_[n] = static_cast<std::uint32_t>(dense_nodes_++);
            const std::size_t base = dense_pool_.size();
            dense_pool_.resize(base + max_value_ + 1, kNone);
            for (std::uint32_t c = 0; c < child_count_[n]; ++c) {
                dense_pool_[base + label_[first_child_[n] + c]] = first_child_[n] + c;
            }
        }
    }

    std::vector<TokenValue> label_;            // value on the edge into each node
    std::vector<std::uint32_t> first_child_;
    std::vector<std::uint32_t> child_count_;
    std::vector<std::uint32_t> terminal_;      // code index or kNone
    std::vector<std::uint32_t> dense_index_;   // row in dense_pool_ or kNone
    std::vector<std::uint32_t> dense_pool_;
    std::vector<std::string> ids_;
    TokenValue max_value_ = 0;
    std::size_t terminals_ = 0;
    std::size_t dense_nodes_ = 0;
    bool prefix_free_ = true;
    std::uint32_t duplicate_ = 0;
};

}  // namespace ger
