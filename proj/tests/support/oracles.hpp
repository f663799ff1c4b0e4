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

// Slow reference implementations shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gercodes/gercodes.hpp"

namespace ger::oracle {

// Distinct tokens sorted by (count, value), first L-1 kept.
inline std::vector<TokenValue> ald_lead(const std::vector<TokenValue>& name, const TokenFrequencyTable& t,
                                        std::size_t length) {
    std::vector<TokenValue> d;
    for (auto v : name) {
        if (std::find(d.begin(), d.end(), v) == d.end()) d.push_back(v);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) {
            const bool swap = t.count(d[j]) < t.count(d[i]) || (t.count(d[j]) == t.count(d[i]) && d[j] < d[i]);
            if (swap) std::swap(d[i], d[j]);
        }
    }
    d.resize(std::min(d.size(), length - 1));
    return d;
}

inline std::vector<AssignedPair> assign(const std::vector<EntityRetrieval>& rs) {
    std::set<std::string> items;
    for (const auto& r : rs) {
        for (const auto& h : r.hits) items.insert(h.item_id);
    }
    std::vector<AssignedPair> out;
    for (const auto& item : items) {
        std::optional<AssignedPair> best;
        for (const auto& r : rs) {
            for (const auto& h : r.hits) {
                if (h.item_id != item) continue;
                if (!best || h.similarity > best->similarity ||
                    (h.similarity == best->similarity && r.entity_id < best->entity_id)) {
                    best = AssignedPair{item, r.entity_id, h.similarity};
                }
            }
        }
        out.push_back(*best);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.entity_id, b.similarity, a.item_id) < std::tie(b.entity_id, a.similarity, b.item_id);
    });
    return out;
}

// Pairs whose item exceeds `threshold` cosine with any eval item are
// evicted; the eviction names the most similar one, ties by id.
inline LeakageResult leakage(const std::vector<AssignedPair>& pairs, const EmbeddingMatrix& items,
                             const EmbeddingMatrix& eval, double threshold) {
    LeakageResult out;
    for (const auto& p : pairs) {
        const auto row = static_cast<std::size_t>(std::find(items.ids.begin(), items.ids.end(), p.item_id) -
                                                  items.ids.begin());
        std::optional<Eviction> worst;
        for (std::size_t q = 0; q < eval.size(); ++q) {
            const double s = cosine(items.vectors.row(row), eval.vectors.row(q));
            if (s > threshold && (!worst || s > worst->similarity ||
                                  (s == worst->similarity && eval.ids[q] < worst->eval_item_id))) {
                worst = Eviction{p.item_id, eval.ids[q], s};
            }
        }
        if (worst) {
            out.evictions.push_back(*worst);
        } else {
            out.kept.push_back(p);
        }
    }
    return out;
}

// Best sequence of exactly `length` tokens over all (V + 2)^length
// candidates; ties by lexicographic order.
inline Hypothesis best_sequence(const TinyGerModel& model, const Matrix& query, std::size_t length) {
    const std::size_t K = model.config().classes();
    std::vector<TokenValue> code(length, 0);
    Hypothesis best{{}, -INFINITY};
    while (true) {
        const Hypothesis h{code, sequence_log_prob(model, query, code)};
        if (best.code.empty() || ranks_before(h, best)) best = h;
        std::size_t p = length;
        while (p > 0 && code[p - 1] + 1 == K) code[--p] = 0;
        if (p == 0) break;
        ++code[p - 1];
    }
    return best;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// Central differences on every parameter, compared with the analytic
// gradient. Relative error uses max(|a|, |n|, floor) as denominator.
inline GradCheck gradient_check(TinyGerModel model, const TrainingExample& ex, double label_smoothing,
                                double step = 1e-5, double floor = 1e-6) {
    const auto analytic = backward(model, ex, label_smoothing);
    GradCheck r;
    auto& p = model.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + step;
        const double up = forward_loss(model, ex, label_smoothing).loss;
        p[i] = saved - step;
        const double down = forward_loss(model, ex, label_smoothing).loss;
        p[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > r.max_rel_error) {
            r.max_rel_error = rel;
            r.worst_index = i;
        }
        ++r.checked;
    }
    return r;
}

// Small random model with every parameter nudged away from its initial value.
inline TinyGerModel random_model(const ModelConfig& cfg, Rng& rng, double jitter = 0.1) {
    TinyGerModel m(cfg);
    for (auto& x : m.params()) x += jitter * rng.normal();
    return m;
}

inline Matrix random_query(const ModelConfig& cfg, Rng& rng) {
    Matrix q(cfg.n_query, cfg.query_dim);
    for (auto& x : q.data()) x = rng.normal();
    return q;
}

}  // namespace ger::oracle
