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

// Embedding files: magic "EMB1", u32 rows, u32 dim (little-endian), then
// row-major float32. Row ids live in a sidecar text file, one per line.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"

namespace ger {

struct EmbeddingMatrix {
    std::vector<std::string> ids;
    Matrix vectors;

    std::size_t size() const noexcept { return ids.size(); }
    std::size_t dim() const noexcept { return vectors.cols(); }

    void validate() const {
        require(ids.size() == vectors.rows(), ErrorKind::kDimensionMismatch,
                "embedding ids (" + std::to_string(ids.size()) + ") and rows (" + std::to_string(vectors.rows()) +
                    ") differ");
        require(all_finite(vectors), ErrorKind::kNonFinite, "embedding matrix has non-finite entries");
    }
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) fail(ErrorKind::kParse, "truncated binary header");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

}  // namespace detail

inline void write_embedding_binary(std::ostream& out, const Matrix& vectors) {
    out.write("EMB1", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(vectors.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(vectors.cols()));
    for (double x : vectors.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
}

inline Matrix read_embedding_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "EMB1", 4) != 0) fail(ErrorKind::kParse, "missing EMB1 magic");
    const std::uint32_t rows = detail::get_u32(in);
    const std::uint32_t cols = detail::get_u32(in);
    Matrix m(rows, cols);
    for (auto& x : m.data()) {
        const float f = std::bit_cast<float>(detail::get_u32(in));
        x = static_cast<double>(f);
    }
    return m;
}

inline void write_embeddings(const std::string& path, const std::string& ids_path, const EmbeddingMatrix& emb) {
    emb.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write '" + path + "'");
    write_embedding_binary(out, emb.vectors);
    std::ofstream ids(ids_path, std::ios::binary);
    if (!ids) fail(ErrorKind::kIo, "cannot write '" + ids_path + "'");
    for (const auto& id : emb.ids) ids << id << '\n';
}

inline EmbeddingMatrix read_embeddings(const std::string& path, const std::string& ids_path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open embeddings file '" + path + "'");
    EmbeddingMatrix emb;
    try {
        emb.vectors = read_embedding_binary(in);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " in '" + path + "'");
    }
    std::ifstream ids(ids_path, std::ios::binary);
    if (!ids) fail(ErrorKind::kIo, "cannot open ids file '" + ids_path + "'");
    std::string line;
    while (std::getline(ids, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) emb.ids.push_back(line);
    }
    try {
        emb.validate();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " ('" + path + "', '" + ids_path + "')");
    }
    return emb;
}

// Conventional sidecar path: "<path>.ids".
inline std::string ids_path_for(const std::string& path) { return path + ".ids"; }

}  // namespace ger
