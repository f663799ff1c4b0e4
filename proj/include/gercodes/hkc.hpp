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

// Lloyd k-means with k-means++ seeding, and hierarchical k-means codes:
// an entity's code is its path of 1-based child indices followed by its
// rank inside the leaf, right-padded with the value k + 1.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gercodes/codebook.hpp"
#include "gercodes/embedding.hpp"
#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/rng.hpp"

namespace ger {

struct KMeansOptions {
    std::uint32_t k = 2;
    std::uint64_t seed = 0;
    std::uint32_t max_iters = 100;
    double tol = 1e-4;  // stop when every centroid moves less than this (L2)
    std::uint32_t restarts = 3;  // independent seedings; lowest final inertia wins
};

struct KMeansResult {
    Matrix centroids;
    std::vector<std::uint32_t> assignments;
    // Inertia after every assignment step, in order.
    std::vector<double> inertia_history;
    std::uint32_t iterations = 0;

    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

namespace detail {

inline double assign_points(const Matrix& points, const Matrix& centroids, std::vector<std::uint32_t>& assignments,
                            std::vector<double>& distances) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_c = 0;
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points.row(i), centroids.row(c));
            if (d < best) {
                best = d;
                best_c = static_cast<std::uint32_t>(c);
            }
        }
        assignments[i] = best_c;
        distances[i] = best;
        inertia += best;
    }
    return inertia;
}

inline Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t chosen = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
    for (std::size_t c = 0; c < k; ++c) {
        std::copy(points.row(chosen).begin(), points.row(chosen).end(), centroids.row(c).begin());
        if (c + 1 == k) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
            total += d2[i];
        }
        if (total <= 0.0) {
            chosen = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
            continue;
        }
        const double target = rng.uniform01() * total;
        double acc = 0.0;
        chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc > target && d2[i] > 0.0) {
                chosen = i;
                break;
            }
        }
    }
    return centroids;
}

inline KMeansResult lloyd(const Matrix& points, const KMeansOptions& opts, Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t k = std::min<std::size_t>(opts.k, n);

    KMeansResult result;
    result.centroids = detail::kmeans_plus_plus(points, k, rng);
    result.assignments.assign(n, 0);
    std::vector<double> distances(n, 0.0);
    std::vector<std::size_t> counts(k);

    for (std::uint32_t iter = 0; iter < opts.max_iters; ++iter) {
        result.inertia_history.push_back(
            detail::assign_points(points, result.centroids, result.assignments, distances));
        result.iterations = iter + 1;

        Matrix updated(k, points.cols());
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = result.assignments[i];
            ++counts[c];
            auto dst = updated.row(c);
            const auto src = points.row(i);
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            auto row = updated.row(c);
            if (counts[c] > 0) {
                for (auto& x : row) x /= static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: re-seed from the point farthest from its centroid.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i] && distances[i] > far_d) {
                    far_d = distances[i];
                    far = i;
                }
            }
            taken[far] = true;
            std::copy(points.row(far).begin(), points.row(far).end(), row.begin());
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            shift = std::max(shift, std::sqrt(squared_distance(updated.row(c), result.centroids.row(c))));
        }
        result.centroids = std::move(updated);
        if (shift < opts.tol) break;
    }
    // Final assignment so that assignments match the returned centroids.
    result.inertia_history.push_back(detail::assign_points(points, result.centroids, result.assignments, distances));
    return result;
}

}  // namespace detail

// Requested k larger than the row count is reduced to the row count.
inline KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts) {
    require(opts.k >= 1, ErrorKind::kInvalidArgument, "k-means needs k >= 1");
    require(points.rows() >= 1, ErrorKind::kEmptyInput, "k-means on zero points");
    require(all_finite(points), ErrorKind::kNonFinite, "k-means input has non-finite values");
    KMeansResult best;
    for (std::uint32_t r = 0; r < std::max<std::uint32_t>(1, opts.restarts); ++r) {
        Rng rng(derive_seed(opts.seed, r == 0 ? std::string("kmeans") : "kmeans/" + std::to_string(r)));
        auto run = detail::lloyd(points, opts, rng);
        if (r == 0 || run.inertia() < best.inertia()) best = std::move(run);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Hierarchical k-means codes

struct HkcOptions {
    std::uint32_t k = 2;
    std::uint32_t max_depth = 3;
    std::uint64_t seed = 0;
    std::uint32_t max_iters = 100;
    double tol = 1e-4;
};

struct HkcNode {
    std::vector<std::uint32_t> path;     // 1-based child indices from the root
    std::vector<std::uint32_t> members;  // row indices, ascending by entity id for leaves
    std::vector<std::size_t> children;   // node indices
    Matrix centroids;                    // one row per child
    bool leaf = false;
};

struct HkcTree {
    std::uint32_t k = 0;
    std::uint32_t max_depth = 0;
    std::vector<HkcNode> nodes;  // nodes[0] is the root
    std::vector<std::size_t> leaf_of;  // row index -> leaf node index

    std::uint32_t depth() const {
        std::uint32_t d = 0;
        for (const auto& n : nodes) d = std::max<std::uint32_t>(d, static_cast<std::uint32_t>(n.path.size()));
        return d;
    }
};

struct HkcResult {
    CodeBook book;
    HkcTree tree;
};

inline HkcResult build_hkc(const EmbeddingMatrix& emb, const HkcOptions& opts) {
    require(!emb.ids.empty(), ErrorKind::kEmptyInput, "no embeddings");
    require(opts.k >= 2, ErrorKind::kInvalidArgument, "hierarchical k-means needs k >= 2");
    emb.validate();
    Matrix points = emb.vectors;
    l2_normalize_rows(points);

    const std::uint32_t k = opts.k;
    HkcTree tree;
    tree.k = k;
    tree.max_depth = opts.max_depth;
    tree.leaf_of.assign(emb.size(), 0);

    HkcNode root;
    root.members.resize(emb.size());
    std::iota(root.members.begin(), root.members.end(), 0u);
    tree.nodes.push_back(std::move(root));

    auto by_id = [&](std::uint32_t a, std::uint32_t b) { return emb.ids[a] < emb.ids[b]; };

    for (std::size_t cursor = 0; cursor < tree.nodes.size(); ++cursor) {
        const std::size_t size = tree.nodes[cursor].members.size();
        const std::size_t depth = tree.nodes[cursor].path.size();
        if (size <= k || depth >= opts.max_depth) {
            auto& node = tree.nodes[cursor];
            node.leaf = true;
            std::sort(node.members.begin(), node.members.end(), by_id);
            for (auto m : node.members) tree.leaf_of[m] = cursor;
            continue;
        }

        const auto members = tree.nodes[cursor].members;
        Matrix sub(members.size(), points.cols());
        for (std::size_t i = 0; i < members.size(); ++i) {
            std::copy(points.row(members[i]).begin(), points.row(members[i]).end(), sub.row(i).begin());
        }
        std::string label = "hkc";
        for (auto p : tree.nodes[cursor].path) label += "/" + std::to_string(p);
        KMeansOptions km{k, derive_seed(opts.seed, label), opts.max_iters, opts.tol};
        const auto result = kmeans(sub, km);

        std::vector<std::vector<std::uint32_t>> groups(result.centroids.rows());
        for (std::size_t i = 0; i < members.size(); ++i) groups[result.assignments[i]].push_back(members[i]);
        std::vector<std::size_t> nonempty;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (!groups[g].empty()) nonempty.push_back(g);
        }
        Matrix centroids;
        if (nonempty.size() <= 1) {
            // Coincident points: k-means cannot split them, so cut the
            // id-sorted member list into k contiguous chunks.
            auto sorted = members;
            std::sort(sorted.begin(), sorted.end(), by_id);
            groups.assign(k, {});
            const std::size_t chunk = (sorted.size() + k - 1) / k;
            for (std::size_t i = 0; i < sorted.size(); ++i) groups[i / chunk].push_back(sorted[i]);
            nonempty.clear();
            for (std::size_t g = 0; g < groups.size(); ++g) {
                if (!groups[g].empty()) nonempty.push_back(g);
            }
            centroids = Matrix(nonempty.size(), points.cols());
            for (std::size_t c = 0; c < nonempty.size(); ++c) {
                const auto& g = groups[nonempty[c]];
                for (auto m : g) {
                    for (std::size_t j = 0; j < points.cols(); ++j) centroids(c, j) += points(m, j);
                }
                for (std::size_t j = 0; j < points.cols(); ++j) centroids(c, j) /= static_cast<double>(g.size());
            }
        } else {
            centroids = Matrix(nonempty.size(), points.cols());
            for (std::size_t c = 0; c < nonempty.size(); ++c) {
                std::copy(result.centroids.row(nonempty[c]).begin(), result.centroids.row(nonempty[c]).end(),
                          centroids.row(c).begin());
            }
        }

        const auto parent_path = tree.nodes[cursor].path;
        std::vector<std::size_t> child_nodes;
        for (std::size_t c = 0; c < nonempty.size(); ++c) {
            HkcNode child;
            child.path = parent_path;
            child.path.push_back(static_cast<std::uint32_t>(c + 1));
            child.members = std::move(groups[nonempty[c]]);
            child_nodes.push_back(tree.nodes.size());
            tree.nodes.push_back(std::move(child));
        }
        auto& node = tree.nodes[cursor];
        node.children = std::move(child_nodes);
        node.centroids = std::move(centroids);
        node.members.clear();
    }

    // Raw codes, then right-pad to a uniform length with k + 1.
    const TokenValue pad = k + 1;
    std::vector<std::vector<TokenValue>> raw(emb.size());
    std::size_t width = 0;
    for (const auto& node : tree.nodes) {
        if (!node.leaf) continue;
        // Within-leaf rank in base k, as many digits as the leaf needs.
        std::size_t digits = 1;
        for (std::size_t span = k; span < node.members.size(); span *= k) ++digits;
        for (std::size_t r = 0; r < node.members.size(); ++r) {
            auto& code = raw[node.members[r]];
            code.assign(node.path.begin(), node.path.end());
            code.resize(node.path.size() + digits);
            std::size_t rest = r;
            for (std::size_t d = code.size(); d-- > node.path.size(); rest /= k) {
                code[d] = static_cast<TokenValue>(rest % k + 1);
            }
            width = std::max(width, code.size());
        }
    }
    HkcResult out;
    out.book = CodeBook(Scheme::kHkc, {static_cast<std::uint32_t>(width), pad, opts.seed});
    for (std::size_t i = 0; i < emb.size(); ++i) {
        auto values = std::move(raw[i]);
        values.resize(width, pad);
        out.book.add(emb.ids[i], Code{std::move(values), {}});
    }
    out.tree = std::move(tree);
    return out;
}

inline CodeBook build_hkc_codes(const EmbeddingMatrix& emb, std::uint32_t k, std::uint32_t max_depth,
                                std::uint64_t seed) {
    HkcOptions opts;
    opts.k = k;
    opts.max_depth = max_depth;
    opts.seed = seed;
    return build_hkc(emb, opts).book;
}

}  // namespace ger
