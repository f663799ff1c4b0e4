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

// Entity codes: corpus token frequencies and the code builders (ALD and its
// selection/order ablations, atomic, caption). Every builder returns a
// CodeBook whose codes are pairwise distinct.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gercodes/error.hpp"
#include "gercodes/parallel.hpp"
#include "gercodes/rng.hpp"
#include "gercodes/tokenizer.hpp"

namespace ger {

struct EntityRecord {
    std::string entity_id;
    std::string name;
};

inline void validate_entities(std::span<const EntityRecord> entities) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) {
        const auto& e = entities[i];
        require(!e.entity_id.empty(), ErrorKind::kInvalidArgument, "entity #" + std::to_string(i + 1) + " has an empty id");
        require(!e.name.empty(), ErrorKind::kInvalidArgument, "entity '" + e.entity_id + "' has an empty name");
        require(seen.insert(e.entity_id).second, ErrorKind::kInvalidArgument,
                "duplicate entity id '" + e.entity_id + "'");
    }
}

// Entities file: `entity_id<TAB>name`, one per line, no header.
inline std::vector<EntityRecord> load_entities(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open entities file '" + path + "'");
    std::vector<EntityRecord> entities;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": expected 'entity_id<TAB>name'");
        }
        entities.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    try {
        validate_entities(entities);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " in '" + path + "'");
    }
    return entities;
}

inline void write_entities(std::ostream& out, std::span<const EntityRecord> entities) {
    for (const auto& e : entities) out << e.entity_id << '\t' << e.name << '\n';
}

inline std::vector<TokenSequence> tokenize_corpus(const Vocabulary& vocab, std::span<const EntityRecord> entities,
                                                  std::size_t threads = 1) {
    std::vector<TokenSequence> out(entities.size());
    parallel_for(entities.size(), threads, [&](std::size_t i) {
        try {
            out[i] = tokenize(vocab, entities[i].name);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (entity '" + entities[i].entity_id + "')");
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Token frequencies

struct TokenFrequencyTable {
    std::vector<std::uint64_t> counts;  // indexed by token value; slot 0 unused
    std::uint64_t total = 0;

    std::size_t vocab_size() const noexcept { return counts.empty() ? 0 : counts.size() - 1; }
    std::uint64_t count(TokenValue v) const { return v < counts.size() ? counts[v] : 0; }
    double frequency(TokenValue v) const {
        return total == 0 ? 0.0 : static_cast<double>(count(v)) / static_cast<double>(total);
    }
    // Strict rarity order: lower count first, ties by ascending token value.
    bool rarer(TokenValue a, TokenValue b) const {
        const auto ca = count(a);
        const auto cb = count(b);
        return ca != cb ? ca < cb : a < b;
    }
};

inline TokenFrequencyTable build_frequency_table(std::size_t vocab_size, std::span<const TokenSequence> corpus,
                                                 std::size_t threads = 1) {
    require(!corpus.empty(), ErrorKind::kEmptyInput, "cannot build frequencies of an empty corpus");
    const std::size_t shards = std::max<std::size_t>(1, std::min(threads, corpus.size()));
    std::vector<std::vector<std::uint64_t>> partial(shards, std::vector<std::uint64_t>(vocab_size + 1, 0));
    const std::size_t chunk = (corpus.size() + shards - 1) / shards;
    parallel_for(shards, shards, [&](std::size_t s) {
        const std::size_t end = std::min(corpus.size(), (s + 1) * chunk);
        for (std::size_t i = s * chunk; i < end; ++i) {
            for (TokenValue v : corpus[i].values) {
                require(v >= 1 && v <= vocab_size, ErrorKind::kInvalidArgument,
                        "token value " + std::to_string(v) + " outside vocabulary");
                ++partial[s][v];
            }
        }
    });
    TokenFrequencyTable table;
    table.counts.assign(vocab_size + 1, 0);
    for (const auto& p : partial) {
        for (std::size_t v = 0; v < p.size(); ++v) table.counts[v] += p[v];
    }
    for (auto c : table.counts) table.total += c;
    return table;
}

inline TokenFrequencyTable build_frequency_table(const Vocabulary& vocab, std::span<const EntityRecord> entities,
                                                 std::size_t threads = 1) {
    require(!entities.empty(), ErrorKind::kEmptyInput, "cannot build frequencies of an empty corpus");
    const auto corpus = tokenize_corpus(vocab, entities, threads);
    return build_frequency_table(vocab.size(), corpus, threads);
}

// Observed tokens sorted by ascending frequency, ties by token value.
inline std::vector<TokenValue> tokens_by_frequency(const TokenFrequencyTable& table) {
    std::vector<TokenValue> order;
    for (std::size_t v = 1; v < table.counts.size(); ++v) {
        if (table.counts[v] > 0) order.push_back(static_cast<TokenValue>(v));
    }
    std::sort(order.begin(), order.end(), [&](TokenValue a, TokenValue b) { return table.rarer(a, b); });
    return order;
}

// TSV `token_value<TAB>token_string<TAB>count<TAB>frequency`.
inline void write_frequency_tsv(std::ostream& out, const TokenFrequencyTable& table, const Vocabulary& vocab) {
    char buf[64];
    for (TokenValue v : tokens_by_frequency(table)) {
        std::snprintf(buf, sizeof(buf), "%.17g", table.frequency(v));
        out << v << '\t' << vocab.token(v) << '\t' << table.counts[v] << '\t' << buf << '\n';
    }
}

// ---------------------------------------------------------------------------
// Codes and code books

enum class Scheme { kAld, kAtomic, kCaption, kHkc };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::kAld: return "ald";
        case Scheme::kAtomic: return "atomic";
        case Scheme::kCaption: return "caption";
        case Scheme::kHkc: return "hkc";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view s) {
    if (s == "ald") return Scheme::kAld;
    if (s == "atomic") return Scheme::kAtomic;
    if (s == "caption") return Scheme::kCaption;
    if (s == "hkc") return Scheme::kHkc;
    fail(ErrorKind::kInvalidArgument, "unknown scheme '" + std::string(s) + "'");
}

struct CodeFlags {
    bool used_random_fallback = false;
    std::uint32_t disambiguation_steps = 0;

    bool operator==(const CodeFlags&) const = default;
};

struct Code {
    std::vector<TokenValue> values;
    CodeFlags flags;

    std::size_t length() const noexcept { return values.size(); }
    bool operator==(const Code&) const = default;
};

struct CodeBookParams {
    std::uint32_t length = 0;      // L; for caption codes the maximum length
    std::uint32_t vocab_size = 0;  // V: code token values live in [1, V]
    std::uint64_t seed = 0;
};

struct CodeHash {
    std::size_t operator()(std::span<const TokenValue> values) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (TokenValue v : values) {
            h ^= v;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(splitmix64(h));
    }
    std::size_t operator()(const std::vector<TokenValue>& values) const noexcept {
        return (*this)(std::span<const TokenValue>(values));
    }
};

using CodeSet = std::unordered_set<std::vector<TokenValue>, CodeHash>;

class CodeBook {
   public:
    CodeBook() = default;
    CodeBook(Scheme scheme, CodeBookParams params) : scheme_(scheme), params_(params) {}

    Scheme scheme() const noexcept { return scheme_; }
    const CodeBookParams& params() const noexcept { return params_; }
    std::uint32_t vocab_size() const noexcept { return params_.vocab_size; }
    // Caption codes close with V + 1; fixed-length schemes never store it.
    TokenValue end_of_code() const noexcept { return params_.vocab_size + 1; }
    // Largest value the decoder may emit for this book.
    TokenValue max_value() const noexcept {
        return scheme_ == Scheme::kCaption ? end_of_code() : params_.vocab_size;
    }

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const Code& code(std::size_t i) const { return codes_.at(i); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<Code>& codes() const noexcept { return codes_; }

    std::optional<std::size_t> find(std::string_view entity_id) const {
        if (index_.size() != ids_.size()) rebuild_index();
        const auto it = index_.find(std::string(entity_id));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t max_length() const noexcept {
        std::size_t m = 0;
        for (const auto& c : codes_) m = std::max(m, c.length());
        return m;
    }

    void add(std::string entity_id, Code code) {
        ids_.push_back(std::move(entity_id));
        codes_.push_back(std::move(code));
    }

    // Range and pairwise-distinctness check; throws kDuplicateCode or
    // kInvalidArgument.
    void validate() const {
        CodeSet seen;
        seen.reserve(codes_.size());
        std::unordered_set<std::string_view> id_seen;
        for (std::size_t i = 0; i < codes_.size(); ++i) {
            const auto& values = codes_[i].values;
            require(!values.empty(), ErrorKind::kInvalidArgument, "empty code for '" + ids_[i] + "'");
            for (TokenValue v : values) {
                require(v >= 1 && v <= max_value(), ErrorKind::kInvalidArgument,
                        "code value " + std::to_string(v) + " out of range for '" + ids_[i] + "'");
            }
            require(seen.insert(values).second, ErrorKind::kDuplicateCode, "code of '" + ids_[i] + "' is not unique");
            require(id_seen.insert(ids_[i]).second, ErrorKind::kInvalidArgument, "duplicate entity '" + ids_[i] + "'");
        }
    }

    std::size_t fallback_count() const noexcept {
        std::size_t n = 0;
        for (const auto& c : codes_) n += c.flags.used_random_fallback ? 1 : 0;
        return n;
    }

    double fallback_fraction() const noexcept {
        return codes_.empty() ? 0.0 : static_cast<double>(fallback_count()) / static_cast<double>(codes_.size());
    }

    bool operator==(const CodeBook& other) const {
        return scheme_ == other.scheme_ && params_.length == other.params_.length &&
               params_.vocab_size == other.params_.vocab_size && params_.seed == other.params_.seed &&
               ids_ == other.ids_ && codes_ == other.codes_;
    }

   private:
    void rebuild_index() const {
        index_.clear();
        for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
    }

    Scheme scheme_ = Scheme::kAld;
    CodeBookParams params_;
    std::vector<std::string> ids_;
    std::vector<Code> codes_;
    mutable std::unordered_map<std::string, std::size_t> index_;
};

inline std::string format_flags(const CodeFlags& flags) {
    if (flags.used_random_fallback) return "R";
    if (flags.disambiguation_steps > 0) return "D" + std::to_string(flags.disambiguation_steps);
    return "-";
}

inline CodeFlags parse_flags(std::string_view s) {
    CodeFlags flags;
    if (s == "-") return flags;
    if (s == "R") {
        flags.used_random_fallback = true;
        return flags;
    }
    if (s.size() >= 2 && s[0] == 'D') {
        std::uint32_t k = 0;
        for (char c : s.substr(1)) {
            require(c >= '0' && c <= '9', ErrorKind::kParse, "bad flags field '" + std::string(s) + "'");
            k = k * 10 + static_cast<std::uint32_t>(c - '0');
        }
        flags.disambiguation_steps = k;
        return flags;
    }
    fail(ErrorKind::kParse, "bad flags field '" + std::string(s) + "'");
}

// Codes file: `entity_id<TAB>v1,v2,...,vL<TAB>flags`.
inline void write_codes_tsv(std::ostream& out, const CodeBook& book) {
    for (std::size_t i = 0; i < book.size(); ++i) {
        out << book.id(i) << '\t';
        const auto& values = book.code(i).values;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (j) out << ',';
            out << values[j];
        }
        out << '\t' << format_flags(book.code(i).flags) << '\n';
    }
}

inline CodeBook read_codes_tsv(const std::string& path, Scheme scheme, CodeBookParams params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open codes file '" + path + "'");
    CodeBook book(scheme, params);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto where = path + ":" + std::to_string(line_no);
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) fail(ErrorKind::kParse, where + ": expected three tab-separated fields");
        Code code;
        std::stringstream values(line.substr(t1 + 1, t2 - t1 - 1));
        std::string item;
        while (std::getline(values, item, ',')) {
            try {
                const auto v = std::stoull(item);
                require(v <= std::numeric_limits<TokenValue>::max(), ErrorKind::kParse, where + ": value overflow");
                code.values.push_back(static_cast<TokenValue>(v));
            } catch (const std::logic_error&) {
                fail(ErrorKind::kParse, where + ": bad token value '" + item + "'");
            }
        }
        try {
            code.flags = parse_flags(std::string_view(line).substr(t2 + 1));
        } catch (const Error& e) {
            throw Error(e.kind(), where + ": " + e.what());
        }
        book.add(line.substr(0, t1), std::move(code));
    }
    try {
        book.validate();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " in '" + path + "'");
    }
    return book;
}

// ---------------------------------------------------------------------------
// ALD codes and ablations

enum class TokenSelection { kLeastFrequent, kMostFrequent, kFirst, kRandom };
enum class TokenOrder { kLeastFirst, kSyntax, kRandom, kLeastLast };

inline TokenSelection parse_selection(std::string_view s) {
    if (s == "least_frequent") return TokenSelection::kLeastFrequent;
    if (s == "most_frequent") return TokenSelection::kMostFrequent;
    if (s == "first") return TokenSelection::kFirst;
    if (s == "random") return TokenSelection::kRandom;
    fail(ErrorKind::kInvalidArgument, "unknown selection strategy '" + std::string(s) + "'");
}

inline TokenOrder parse_order(std::string_view s) {
    if (s == "least_first") return TokenOrder::kLeastFirst;
    if (s == "syntax") return TokenOrder::kSyntax;
    if (s == "random") return TokenOrder::kRandom;
    if (s == "least_last") return TokenOrder::kLeastLast;
    fail(ErrorKind::kInvalidArgument, "unknown token order '" + std::string(s) + "'");
}

inline const char* to_string(TokenSelection s) {
    switch (s) {
        case TokenSelection::kLeastFrequent: return "least_frequent";
        case TokenSelection::kMostFrequent: return "most_frequent";
        case TokenSelection::kFirst: return "first";
        case TokenSelection::kRandom: return "random";
    }
    return "?";
}

inline const char* to_string(TokenOrder o) {
    switch (o) {
        case TokenOrder::kLeastFirst: return "least_first";
        case TokenOrder::kSyntax: return "syntax";
        case TokenOrder::kRandom: return "random";
        case TokenOrder::kLeastLast: return "least_last";
    }
    return "?";
}

struct AldOptions {
    std::uint32_t length = 4;
    std::uint64_t seed = 0;
    TokenSelection selection = TokenSelection::kLeastFrequent;
    TokenOrder order = TokenOrder::kLeastFirst;
    // Rejection-sampling budget for the random last token; 0 means 10 * V.
    std::uint64_t max_random_draws = 0;
};

// Distinct tokens of a name in first-occurrence order.
inline std::vector<TokenValue> distinct_tokens(std::span<const TokenValue> values) {
    std::vector<TokenValue> out;
    for (TokenValue v : values) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

namespace detail {

inline std::uint64_t random_draw_cap(std::uint64_t configured, std::uint32_t vocab_size) {
    return configured != 0 ? configured : 10ULL * vocab_size;
}

// Fills the last slot of `values` with uniform draws in [1, V] until the
// code is not in `taken`.
inline void draw_unique_last(std::vector<TokenValue>& values, const CodeSet& taken, Rng& rng, std::uint32_t vocab_size,
                             std::uint64_t cap, const std::string& entity_id) {
    for (std::uint64_t attempt = 0; attempt < cap; ++attempt) {
        values.back() = static_cast<TokenValue>(rng.uniform_int(1, vocab_size));
        if (!taken.contains(values)) return;
    }
    fail(ErrorKind::kUniquenessUnattainable,
         "no unique code for entity '" + entity_id + "' after " + std::to_string(cap) + " random draws");
}

}  // namespace detail

// Selection and ordering pipeline shared by ALD and its ablations. Entities
// are processed in input order; that order is part of the determinism
// contract because the greedy uniqueness loop depends on it.
inline CodeBook build_ald_codes(std::span<const EntityRecord> entities, std::span<const TokenSequence> corpus,
                                const TokenFrequencyTable& table, std::uint32_t vocab_size, const AldOptions& opts) {
    require(opts.length >= 2, ErrorKind::kInvalidArgument, "ALD codes need L >= 2");
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    require(entities.size() == corpus.size(), ErrorKind::kDimensionMismatch, "entities and tokenized corpus differ");
    require(vocab_size >= 1, ErrorKind::kInvalidArgument, "empty vocabulary");

    const std::uint32_t lead = opts.length - 1;
    const auto cap = detail::random_draw_cap(opts.max_random_draws, vocab_size);
    Rng rng(derive_seed(opts.seed, "ald"));
    CodeBook book(Scheme::kAld, {opts.length, vocab_size, opts.seed});
    CodeSet taken;
    taken.reserve(entities.size() * 2);

    auto rarer = [&](TokenValue a, TokenValue b) { return table.rarer(a, b); };

    for (std::size_t e = 0; e < entities.size(); ++e) {
        const auto tokens = distinct_tokens(corpus[e].values);

        std::vector<TokenValue> ranked = tokens;
        switch (opts.selection) {
            case TokenSelection::kLeastFrequent:
                std::sort(ranked.begin(), ranked.end(), rarer);
                break;
            case TokenSelection::kMostFrequent:
                std::sort(ranked.begin(), ranked.end(), [&](TokenValue a, TokenValue b) {
                    const auto ca = table.count(a);
                    const auto cb = table.count(b);
                    return ca != cb ? ca > cb : a < b;
                });
                break;
            case TokenSelection::kFirst:
                break;
            case TokenSelection::kRandom:
                rng.shuffle(std::span<TokenValue>(ranked));
                break;
        }

        const std::size_t kept = std::min<std::size_t>(lead, ranked.size());
        std::vector<TokenValue> selected(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(kept));
        switch (opts.order) {
            case TokenOrder::kLeastFirst:
                std::sort(selected.begin(), selected.end(), rarer);
                break;
            case TokenOrder::kLeastLast:
                std::sort(selected.begin(), selected.end(), [&](TokenValue a, TokenValue b) { return rarer(b, a); });
                break;
            case TokenOrder::kSyntax: {
                auto position = [&](TokenValue v) { return std::find(tokens.begin(), tokens.end(), v) - tokens.begin(); };
                std::sort(selected.begin(), selected.end(),
                          [&](TokenValue a, TokenValue b) { return position(a) < position(b); });
                break;
            }
            case TokenOrder::kRandom:
                rng.shuffle(std::span<TokenValue>(selected));
                break;
        }

        Code code;
        code.values = selected;
        code.values.reserve(opts.length);
        while (code.values.size() < lead) {
            code.values.push_back(static_cast<TokenValue>(rng.uniform_int(1, vocab_size)));
        }
        code.values.push_back(0);

        bool placed = false;
        for (std::size_t c = kept; c < ranked.size(); ++c) {
            code.values.back() = ranked[c];
            if (!taken.contains(code.values)) {
                code.flags.disambiguation_steps = static_cast<std::uint32_t>(c - kept);
                placed = true;
                break;
            }
        }
        if (!placed) {
            code.flags.disambiguation_steps = static_cast<std::uint32_t>(ranked.size() - kept);
            code.flags.used_random_fallback = true;
            detail::draw_unique_last(code.values, taken, rng, vocab_size, cap, entities[e].entity_id);
        }
        taken.insert(code.values);
        book.add(entities[e].entity_id, std::move(code));
    }
    return book;
}

inline CodeBook build_ald_codes(const Vocabulary& vocab, std::span<const EntityRecord> entities, std::uint32_t length,
                                std::uint64_t seed, std::size_t threads = 1) {
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    const auto corpus = tokenize_corpus(vocab, entities, threads);
    const auto table = build_frequency_table(vocab.size(), corpus, threads);
    AldOptions opts;
    opts.length = length;
    opts.seed = seed;
    return build_ald_codes(entities, corpus, table, static_cast<std::uint32_t>(vocab.size()), opts);
}

inline CodeBook ablation_select(const Vocabulary& vocab, std::span<const EntityRecord> entities,
                                const AldOptions& opts, std::size_t threads = 1) {
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    const auto corpus = tokenize_corpus(vocab, entities, threads);
    const auto table = build_frequency_table(vocab.size(), corpus, threads);
    return build_ald_codes(entities, corpus, table, static_cast<std::uint32_t>(vocab.size()), opts);
}

// ---------------------------------------------------------------------------
// Atomic codes

// Returns V^L, or nullopt when it exceeds 2^64 - 1.
inline std::optional<std::uint64_t> code_space_size(std::uint32_t vocab_size, std::uint32_t length) {
    std::uint64_t total = 1;
    for (std::uint32_t i = 0; i < length; ++i) {
        if (vocab_size != 0 && total > std::numeric_limits<std::uint64_t>::max() / vocab_size) return std::nullopt;
        total *= vocab_size;
    }
    return total;
}

inline CodeBook build_atomic_codes(std::span<const EntityRecord> entities, std::uint32_t length,
                                   std::uint32_t vocab_size, std::uint64_t seed) {
    require(length >= 1, ErrorKind::kInvalidArgument, "atomic codes need L >= 1");
    require(vocab_size >= 1, ErrorKind::kInvalidArgument, "atomic codes need V >= 1");
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    const auto space = code_space_size(vocab_size, length);
    if (space && *space < entities.size()) {
        fail(ErrorKind::kCodeSpaceTooSmall, "V^L = " + std::to_string(*space) + " < " +
                                                std::to_string(entities.size()) + " entities");
    }
    Rng rng(derive_seed(seed, "atomic"));
    CodeBook book(Scheme::kAtomic, {length, vocab_size, seed});

    auto decode_index = [&](std::uint64_t index) {
        std::vector<TokenValue> values(length);
        for (std::uint32_t i = length; i-- > 0;) {
            values[i] = static_cast<TokenValue>(index % vocab_size) + 1;
            index /= vocab_size;
        }
        return values;
    };

    // Dense regime: partial Fisher-Yates over the whole index space.
    if (space && *space <= 2 * static_cast<std::uint64_t>(entities.size())) {
        std::vector<std::uint64_t> pool(*space);
        for (std::uint64_t i = 0; i < *space; ++i) pool[i] = i;
        for (std::size_t e = 0; e < entities.size(); ++e) {
            const auto j = rng.uniform_int(e, *space - 1);
            std::swap(pool[e], pool[j]);
            book.add(entities[e].entity_id, Code{decode_index(pool[e]), {}});
        }
        return book;
    }

    CodeSet taken;
    taken.reserve(entities.size() * 2);
    for (const auto& entity : entities) {
        std::vector<TokenValue> values(length);
        do {
            for (auto& v : values) v = static_cast<TokenValue>(rng.uniform_int(1, vocab_size));
        } while (taken.contains(values));
        taken.insert(values);
        book.add(entity.entity_id, Code{std::move(values), {}});
    }
    return book;
}

// ---------------------------------------------------------------------------
// Caption codes

struct CaptionOptions {
    std::optional<std::uint32_t> truncate_at;
    std::uint64_t seed = 0;
    std::uint64_t max_random_draws = 0;
};

// Full tokenized name followed by V + 1. With truncation the first
// `truncate_at` tokens are kept; names at most that long still end with V + 1
// when there is room. Collisions re-assign the last name-token slot greedily
// from the following name tokens, then randomly.
inline CodeBook build_caption_codes(std::span<const EntityRecord> entities, std::span<const TokenSequence> corpus,
                                    std::uint32_t vocab_size, const CaptionOptions& opts) {
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    require(entities.size() == corpus.size(), ErrorKind::kDimensionMismatch, "entities and tokenized corpus differ");
    require(!opts.truncate_at || *opts.truncate_at >= 1, ErrorKind::kInvalidArgument, "truncate_at must be >= 1");
    const TokenValue eoc = vocab_size + 1;
    const auto cap = detail::random_draw_cap(opts.max_random_draws, vocab_size);
    Rng rng(derive_seed(opts.seed, "caption"));

    std::uint32_t max_len = 0;
    CodeBook book(Scheme::kCaption, {0, vocab_size, opts.seed});
    CodeSet taken;
    taken.reserve(entities.size() * 2);
    for (std::size_t e = 0; e < entities.size(); ++e) {
        const auto& name = corpus[e].values;
        require(!name.empty(), ErrorKind::kEmptyInput, "entity '" + entities[e].entity_id + "' has no tokens");
        std::size_t body = name.size();
        bool terminated = true;
        if (opts.truncate_at) {
            const std::size_t t = *opts.truncate_at;
            if (name.size() >= t) {
                body = t;
                terminated = false;
            }
        }
        Code code;
        code.values.assign(name.begin(), name.begin() + static_cast<std::ptrdiff_t>(body));
        if (terminated) code.values.push_back(eoc);

        if (taken.contains(code.values)) {
            // Disambiguate on the last name-token slot.
            const std::size_t slot = body - 1;
            bool placed = false;
            std::uint32_t steps = 0;
            for (std::size_t c = body; c < name.size(); ++c) {
                ++steps;
                code.values[slot] = name[c];
                if (!taken.contains(code.values)) {
                    placed = true;
                    break;
                }
            }
            code.flags.disambiguation_steps = steps;
            if (!placed) {
                code.flags.used_random_fallback = true;
                bool found = false;
                for (std::uint64_t attempt = 0; attempt < cap && !found; ++attempt) {
                    code.values[slot] = static_cast<TokenValue>(rng.uniform_int(1, vocab_size));
                    found = !taken.contains(code.values);
                }
                if (!found) {
                    fail(ErrorKind::kUniquenessUnattainable, "no unique caption code for entity '" +
                                                                  entities[e].entity_id + "' after " +
                                                                  std::to_string(cap) + " random draws");
                }
            }
        }
        max_len = std::max<std::uint32_t>(max_len, static_cast<std::uint32_t>(code.values.size()));
        taken.insert(code.values);
        book.add(entities[e].entity_id, std::move(code));
    }
    CodeBook out(Scheme::kCaption, {max_len, vocab_size, opts.seed});
    for (std::size_t i = 0; i < book.size(); ++i) out.add(book.id(i), book.code(i));
    return out;
}

inline CodeBook build_caption_codes(const Vocabulary& vocab, std::span<const EntityRecord> entities,
                                    std::optional<std::uint32_t> truncate_at, std::uint64_t seed = 0) {
    require(!entities.empty(), ErrorKind::kEmptyInput, "no entities");
    const auto corpus = tokenize_corpus(vocab, entities);
    CaptionOptions opts;
    opts.truncate_at = truncate_at;
    opts.seed = seed;
    return build_caption_codes(entities, corpus, static_cast<std::uint32_t>(vocab.size()), opts);
}

// Counts of disambiguation steps over non-fallback codes; fallbacks under "R".
inline std::map<std::string, std::size_t> disambiguation_histogram(const CodeBook& book) {
    std::map<std::string, std::size_t> hist;
    for (const auto& code : book.codes()) {
        if (code.flags.used_random_fallback) {
            ++hist["R"];
        } else {
            ++hist[std::to_string(code.flags.disambiguation_steps)];
        }
    }
    return hist;
}

}  // namespace ger
