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

// Entity-based pretraining data: retrieve the k most similar caption items
// per entity, keep every item for one entity only, then evict items that
// nearly duplicate an evaluation item.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gercodes/embedding.hpp"
#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/parallel.hpp"
#include "json.hpp"

namespace ger {

inline constexpr double kDefaultLeakageThreshold = 0.95;

struct RetrievalHit {
    std::string item_id;
    double similarity = 0.0;
};

struct EntityRetrieval {
    std::string entity_id;
    std::vector<RetrievalHit> hits;  // best first
};

struct AssignedPair {
    std::string item_id;
    std::string entity_id;
    double similarity = 0.0;

    bool operator==(const AssignedPair&) const = default;
};

struct Eviction {
    std::string item_id;
    std::string eval_item_id;
    double similarity = 0.0;
};

struct LeakageResult {
    std::vector<AssignedPair> kept;
    std::vector<Eviction> evictions;
};

namespace detail {

inline std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = norm(m.row(r));
    return out;
}

inline double cosine_with_norms(std::span<const double> a, double na, std::span<const double> b, double nb) {
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace detail

// Exhaustive cosine top-k per entity; ties by ascending item id.
inline std::vector<EntityRetrieval> topk_retrieve(const EmbeddingMatrix& entities, const EmbeddingMatrix& items,
                                                  std::size_t k, std::size_t threads = 1) {
    require(k >= 1, ErrorKind::kInvalidArgument, "top-k retrieval needs k >= 1");
    entities.validate();
    items.validate();
    if (!items.ids.empty() && !entities.ids.empty()) {
        require(entities.dim() == items.dim(), ErrorKind::kDimensionMismatch,
                "entity dim " + std::to_string(entities.dim()) + " != item dim " + std::to_string(items.dim()));
    }
    const auto entity_norms = detail::row_norms(entities.vectors);
    const auto item_norms = detail::row_norms(items.vectors);
    std::vector<EntityRetrieval> out(entities.size());
    parallel_for(entities.size(), threads, [&](std::size_t e) {
        std::vector<std::pair<double, std::uint32_t>> scored(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
            scored[i] = {detail::cosine_with_norms(entities.vectors.row(e), entity_norms[e], items.vectors.row(i),
                                                   item_norms[i]),
                         static_cast<std::uint32_t>(i)};
        }
        const std::size_t take = std::min(k, scored.size());
        auto better = [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return items.ids[a.second] < items.ids[b.second];
        };
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
        out[e].entity_id = entities.ids[e];
        out[e].hits.reserve(take);
        for (std::size_t j = 0; j < take; ++j) {
            out[e].hits.push_back({items.ids[scored[j].second], scored[j].first});
        }
    });
    return out;
}

// Each item goes to its highest-similarity claimant, ties by ascending
// entity id. Output sorted by entity id, then similarity descending.
inline std::vector<AssignedPair> assign_unique(const std::vector<EntityRetrieval>& retrievals) {
    std::unordered_map<std::string, AssignedPair> best;
    for (const auto& r : retrievals) {
        for (const auto& hit : r.hits) {
            auto [it, inserted] = best.try_emplace(hit.item_id, AssignedPair{hit.item_id, r.entity_id, hit.similarity});
            if (inserted) continue;
            auto& cur = it->second;
            if (hit.similarity > cur.similarity ||
                (hit.similarity == cur.similarity && r.entity_id < cur.entity_id)) {
                cur.entity_id = r.entity_id;
                cur.similarity = hit.similarity;
            }
        }
    }
    std::vector<AssignedPair> out;
    out.reserve(best.size());
    for (auto& [_, pair] : best) out.push_back(std::move(pair));
    std::sort(out.begin(), out.end(), [](const AssignedPair& a, const AssignedPair& b) {
        if (a.entity_id != b.entity_id) return a.entity_id < b.entity_id;
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.item_id < b.item_id;
    });
    return out;
}

// Drops every pair whose item has cosine similarity strictly above
// `threshold` with some evaluation item. The report names the most similar
// evaluation item (ties by ascending id) for each eviction.
inline LeakageResult leakage_filter(const std::vector<AssignedPair>& pairs, const EmbeddingMatrix& items,
                                    const EmbeddingMatrix& eval_items, double threshold = kDefaultLeakageThreshold,
                                    std::size_t threads = 1) {
    require(threshold > 0.0 && threshold <= 1.0, ErrorKind::kInvalidArgument, "leakage threshold must lie in (0, 1]");
    items.validate();
    eval_items.validate();
    if (!eval_items.ids.empty() && !items.ids.empty()) {
        require(items.dim() == eval_items.dim(), ErrorKind::kDimensionMismatch, "item and eval-item dims differ");
    }
    std::unordered_map<std::string, std::size_t> item_row;
    for (std::size_t i = 0; i < items.size(); ++i) item_row.emplace(items.ids[i], i);
    const auto item_norms = detail::row_norms(items.vectors);
    const auto eval_norms = detail::row_norms(eval_items.vectors);

    std::vector<std::optional<Eviction>> verdict(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto it = item_row.find(pairs[p].item_id);
        require(it != item_row.end(), ErrorKind::kInvalidArgument,
                "assigned item '" + pairs[p].item_id + "' missing from item embeddings");
        const std::size_t row = it->second;
        std::optional<Eviction> worst;
        for (std::size_t q = 0; q < eval_items.size(); ++q) {
            const double s = detail::cosine_with_norms(items.vectors.row(row), item_norms[row],
                                                       eval_items.vectors.row(q), eval_norms[q]);
            if (s <= threshold) continue;
            if (!worst || s > worst->similarity ||
                (s == worst->similarity && eval_items.ids[q] < worst->eval_item_id)) {
                worst = Eviction{pairs[p].item_id, eval_items.ids[q], s};
            }
        }
        verdict[p] = std::move(worst);
    });
    LeakageResult result;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (verdict[p]) {
            result.evictions.push_back(std::move(*verdict[p]));
        } else {
            result.kept.push_back(pairs[p]);
        }
    }
    return result;
}

inline void write_pairs_jsonl(std::ostream& out, const std::vector<AssignedPair>& pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["item_id"] = p.item_id;
        j["entity_id"] = p.entity_id;
        j["similarity"] = p.similarity;
        out << j.dump() << '\n';
    }
}

inline void write_evictions_tsv(std::ostream& out, const std::vector<Eviction>& evictions) {
    char buf[64];
    for (const auto& e : evictions) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.similarity);
        out << e.item_id << '\t' << e.eval_item_id << '\t' << buf << '\n';
    }
}

}  // namespace ger
