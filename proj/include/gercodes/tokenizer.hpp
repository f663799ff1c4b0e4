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

// Greedy longest-match-first subword tokenizer over a line-per-token
// vocabulary. Token values are 1-based line numbers; 0 is never a vocabulary
// entry because it marks the beginning of a code.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gercodes/error.hpp"

namespace ger {

using TokenValue = std::uint32_t;

inline constexpr TokenValue kBeginOfCode = 0;

class Vocabulary {
   public:
    Vocabulary() = default;

    // Throws kEmptyLine / kDuplicateToken on invariant violations.
    explicit Vocabulary(std::vector<std::string> tokens, std::string continuation_prefix = "##",
                        std::string unknown_token = "[UNK]")
        : tokens_(std::move(tokens)),
          continuation_prefix_(std::move(continuation_prefix)),
          unknown_token_(std::move(unknown_token)) {
        index_.reserve(tokens_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            if (tokens_[i].empty()) {
                fail(ErrorKind::kEmptyLine, "empty token at line " + std::to_string(i + 1));
            }
            const auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenValue>(i + 1));
            if (!inserted) {
                fail(ErrorKind::kDuplicateToken, "token '" + tokens_[i] + "' at line " + std::to_string(i + 1) +
                                                     " already defined at line " + std::to_string(it->second));
            }
        }
    }

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::string& continuation_prefix() const noexcept { return continuation_prefix_; }
    const std::string& unknown_token() const noexcept { return unknown_token_; }

    // Surface string of a 1-based token value.
    const std::string& token(TokenValue value) const { return tokens_.at(value - 1); }

    std::optional<TokenValue> find(std::string_view token) const {
        const auto it = index_.find(std::string(token));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<TokenValue> unknown_value() const { return find(unknown_token_); }

    void set_unknown_token(std::string token) { unknown_token_ = std::move(token); }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

   private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenValue> index_;
    std::string continuation_prefix_ = "##";
    std::string unknown_token_ = "[UNK]";
};

inline Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open vocabulary file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    if (in.bad()) fail(ErrorKind::kIo, "read failure on '" + path + "'");
    if (tokens.empty()) fail(ErrorKind::kEmptyInput, "vocabulary file '" + path + "' has no tokens");
    try {
        return Vocabulary(std::move(tokens));
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " in '" + path + "'");
    }
}

struct TokenSequence {
    std::vector<TokenValue> values;
    std::string source_name;
};

namespace detail {

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

inline bool is_utf8_boundary(std::string_view s, std::size_t pos) {
    return pos == 0 || pos >= s.size() || (static_cast<unsigned char>(s[pos]) & 0xC0) != 0x80;
}

}  // namespace detail

// Lowercases ASCII letters and splits on whitespace; every ASCII punctuation
// character becomes a word of its own. Non-ASCII bytes pass through intact.
inline std::vector<std::string> split_words(std::string_view name) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) words.push_back(std::move(current));
        current.clear();
    };
    for (char ch : name) {
        const auto c = static_cast<unsigned char>(ch);
        if (detail::is_ascii_space(c)) {
            flush();
        } else if (detail::is_ascii_punct(c)) {
            flush();
            words.emplace_back(1, ch);
        } else if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            current.push_back(ch);
        }
    }
    flush();
    return words;
}

inline constexpr std::size_t kMaxCharsPerWord = 100;

// Appends the subword values of one normalized word. Returns false when the
// word has no complete segmentation; nothing is appended in that case.
inline bool wordpiece(const Vocabulary& vocab, std::string_view word, std::vector<TokenValue>& out) {
    if (word.size() > kMaxCharsPerWord) return false;
    std::vector<TokenValue> pieces;
    std::string candidate;
    std::size_t start = 0;
    while (start < word.size()) {
        std::size_t end = word.size();
        std::optional<TokenValue> match;
        while (end > start) {
            if (detail::is_utf8_boundary(word, end)) {
                candidate.clear();
                if (start > 0) candidate += vocab.continuation_prefix();
                candidate.append(word.substr(start, end - start));
                match = vocab.find(candidate);
                if (match) break;
            }
            --end;
        }
        if (!match) return false;
        pieces.push_back(*match);
        start = end;
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
    return true;
}

inline TokenSequence tokenize(const Vocabulary& vocab, std::string_view name) {
    const auto words = split_words(name);
    if (words.empty()) fail(ErrorKind::kEmptyInput, "entity name is empty after normalization");
    TokenSequence seq;
    seq.source_name = std::string(name);
    for (const auto& word : words) {
        if (!wordpiece(vocab, word, seq.values)) {
            const auto unk = vocab.unknown_value();
            if (!unk) {
                fail(ErrorKind::kMissingUnknownToken,
                     "word '" + word + "' has no segmentation and vocabulary lacks '" + vocab.unknown_token() + "'");
            }
            seq.values.push_back(*unk);
        }
    }
    return seq;
}

}  // namespace ger
