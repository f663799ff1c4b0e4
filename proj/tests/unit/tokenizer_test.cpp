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

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "gercodes/rng.hpp"
#include "gercodes/tokenizer.hpp"

namespace ger {
namespace {

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / ("gercodes_tok_" + name)).string();
    std::ofstream(path, std::ios::binary) << content;
    return path;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::kIo;
}

std::vector<std::string> surface(const Vocabulary& v, const TokenSequence& s) {
    std::vector<std::string> out;
    for (auto t : s.values) out.push_back(v.token(t));
    return out;
}

TEST(Vocabulary, LoadsFourLineFile) {
    const auto v = load_vocabulary(temp_file("four", "a\nb\n##c\nd"));
    EXPECT_EQ(v.size(), 4u);
    EXPECT_EQ(v.token(3), "##c");
    EXPECT_EQ(*v.find("d"), 4u);
}

TEST(Vocabulary, RejectsDuplicateAndEmptyLines) {
    EXPECT_EQ(kind_of([] { load_vocabulary(temp_file("dup", "a\na\n")); }), ErrorKind::kDuplicateToken);
    EXPECT_EQ(kind_of([] { load_vocabulary(temp_file("empty", "a\n\nb\n")); }), ErrorKind::kEmptyLine);
    EXPECT_EQ(kind_of([] { load_vocabulary("/nonexistent/vocab.txt"); }), ErrorKind::kIo);
}

TEST(Vocabulary, LargeFileKeepsLineNumbers) {
    std::string text;
    for (int i = 0; i < 30522; ++i) text += "t" + std::to_string(i) + "\n";
    const auto v = load_vocabulary(temp_file("big", text));
    EXPECT_EQ(v.size(), 30522u);
    EXPECT_EQ(v.token(30522), "t30521");
}

TEST(Tokenize, GreedyLongestMatch) {
    const Vocabulary v({"un", "##aff", "##able", "aff", "[UNK]"});
    EXPECT_EQ(surface(v, tokenize(v, "unaffable")), (std::vector<std::string>{"un", "##aff", "##able"}));
}

TEST(Tokenize, SingleWord) {
    const Vocabulary v({"cat", "[UNK]"});
    const auto s = tokenize(v, "Cat");
    ASSERT_EQ(s.values.size(), 1u);
    EXPECT_EQ(s.values[0], 1u);
    EXPECT_EQ(s.source_name, "Cat");
}

TEST(Tokenize, PunctuationAndCase) {
    EXPECT_EQ(split_words("  Black-and-White\tcolobus! "),
              (std::vector<std::string>{"black", "-", "and", "-", "white", "colobus", "!"}));
}

TEST(Tokenize, UnknownWordsMapToOneUnknown) {
    const Vocabulary v({"ab", "[UNK]"});
    const auto s = tokenize(v, "ab abc ab");
    EXPECT_EQ(s.values, (std::vector<TokenValue>{1, 2, 1}));
    const Vocabulary no_unk({"ab"});
    EXPECT_EQ(kind_of([&] { tokenize(no_unk, "zz"); }), ErrorKind::kMissingUnknownToken);
    EXPECT_EQ(kind_of([&] { tokenize(v, "   "); }), ErrorKind::kEmptyInput);
}

TEST(Tokenize, MultibyteCharactersAreNotSplit) {
    const Vocabulary v({"caf", "##\xc3\xa9", "[UNK]"});
    EXPECT_EQ(surface(v, tokenize(v, "caf\xc3\xa9")), (std::vector<std::string>{"caf", "##\xc3\xa9"}));
}

// Independent segmentation oracle: at each position try every remaining
// length from longest to shortest against a std::set.
bool oracle_segment(const std::set<std::string>& vocab, const std::string& word, std::vector<std::string>& out) {
    std::size_t pos = 0;
    while (pos < word.size()) {
        bool found = false;
        for (std::size_t len = word.size() - pos; len >= 1; --len) {
            const std::string piece = (pos == 0 ? "" : "##") + word.substr(pos, len);
            if (vocab.count(piece)) {
                out.push_back(piece);
                pos += len;
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

TEST(Tokenize, MatchesOracleOnRandomVocabularies) {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        std::set<std::string> pieces;
        const auto n = rng.uniform_int(3, 40);
        while (pieces.size() < n) {
            std::string p = rng.uniform_int(0, 1) ? "##" : "";
            const auto len = rng.uniform_int(1, 3);
            for (std::uint64_t i = 0; i < len; ++i) p += static_cast<char>('a' + rng.uniform_int(0, 2));
            pieces.insert(p);
        }
        pieces.insert("[UNK]");
        const Vocabulary v(std::vector<std::string>(pieces.begin(), pieces.end()));
        for (int w = 0; w < 20; ++w) {
            std::string word;
            const auto len = rng.uniform_int(1, 8);
            for (std::uint64_t i = 0; i < len; ++i) word += static_cast<char>('a' + rng.uniform_int(0, 2));
            std::vector<std::string> expect;
            const bool ok = oracle_segment(pieces, word, expect);
            const auto got = surface(v, tokenize(v, word));
            if (ok) {
                EXPECT_EQ(got, expect) << word;
                std::string joined;
                for (const auto& g : got) joined += g.rfind("##", 0) == 0 ? g.substr(2) : g;
                EXPECT_EQ(joined, word);
            } else {
                EXPECT_EQ(got, std::vector<std::string>{"[UNK]"}) << word;
            }
            for (auto t : tokenize(v, word).values) {
                EXPECT_GE(t, 1u);
                EXPECT_LE(t, v.size());
            }
        }
    }
}

}  // namespace
}  // namespace ger
