#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "neardup/error.hpp"

namespace neardup {

using EmbeddingVector = std::vector<float>;

// Angular distance: arccos of the cosine similarity, scaled by 1/pi so
// the result lands in [0,1] with 0 = same direction. The cosine is
// clamped before arccos: accumulated rounding can push it past +/-1 for
// near-parallel vectors.
inline double dist_semantic(std::span<const float> e1,
                            std::span<const float> e2) {
  if (e1.size() != e2.size())
    throw error("embedding dimension mismatch: " + std::to_string(e1.size()) +
                " vs " + std::to_string(e2.size()));
  if (e1.empty()) throw error("empty embedding vector");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    const double a = e1[i];
    const double b = e2[i];
    dot += a * b;
    n1 += a * a;
    n2 += b * b;
  }
  if (n1 == 0.0 || n2 == 0.0) throw error("zero embedding vector");
  const double cosine = std::clamp(dot / std::sqrt(n1 * n2), -1.0, 1.0);
  return std::acos(cosine) / std::numbers::pi;
}

// Write-once map from message id to embedding; all vectors share one
// dimension. Two on-disk encodings: JSONL records and a compact binary
// layout ("EMB1" magic, u32le dim, then [u16le id-length, id, dim f32le]
// records).
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::string provider) : provider_(std::move(provider)) {}

  void insert(const std::string& id, EmbeddingVector vec) {
    if (vec.empty()) throw error("empty embedding for id " + id);
    for (float v : vec) {
      if (!std::isfinite(v)) throw error("non-finite embedding value for id " + id);
    }
    if (dim_ == 0)
      dim_ = vec.size();
    else if (vec.size() != dim_)
      throw error("embedding dimension mismatch for id " + id + ": expected " +
                  std::to_string(dim_) + ", got " + std::to_string(vec.size()));
    if (!vectors_.emplace(id, std::move(vec)).second)
      throw error("duplicate embedding id: " + id);
  }

  bool contains(const std::string& id) const { return vectors_.count(id) > 0; }

  std::span<const float> at(const std::string& id) const {
    const auto it = vectors_.find(id);
    if (it == vectors_.end()) throw error("no embedding for id " + id);
    return it->second;
  }

  std::size_t size() const { return vectors_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& provider() const { return provider_; }
  void set_provider(std::string p) { provider_ = std::move(p); }

  const std::unordered_map<std::string, EmbeddingVector>& entries() const {
    return vectors_;
  }

  // Ids present in `ids` but absent from the store, in input order.
  template <typename Iterable>
  std::vector<std::string> missing(const Iterable& ids) const {
    std::vector<std::string> out;
    for (const auto& id : ids)
      if (!contains(id)) out.push_back(id);
    return out;
  }

  void save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open output file: " + path);
    std::vector<const std::string*> ids;
    ids.reserve(vectors_.size());
    for (const auto& [id, _] : vectors_) ids.push_back(&id);
    std::sort(ids.begin(), ids.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* id : ids) {
      nlohmann::json rec{{"id", *id}, {"embedding", vectors_.at(*id)}};
      out << rec << '\n';
    }
    if (!out) throw error("write failed: " + path);
  }

  void save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open output file: " + path);
    out.write("EMB1", 4);
    const auto dim32 = static_cast<std::uint32_t>(dim_);
    out.write(reinterpret_cast<const char*>(&dim32), 4);
    std::vector<const std::string*> ids;
    ids.reserve(vectors_.size());
    for (const auto& [id, _] : vectors_) ids.push_back(&id);
    std::sort(ids.begin(), ids.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* id : ids) {
      if (id->size() > 0xFFFF) throw error("id too long for binary format: " + *id);
      const auto len = static_cast<std::uint16_t>(id->size());
      out.write(reinterpret_cast<const char*>(&len), 2);
      out.write(id->data(), len);
      const auto& vec = vectors_.at(*id);
      out.write(reinterpret_cast<const char*>(vec.data()),
                static_cast<std::streamsize>(vec.size() * sizeof(float)));
    }
    if (!out) throw error("write failed: " + path);
  }

  static EmbeddingStore load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open embedding file: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() == 4 && std::memcmp(magic, "EMB1", 4) == 0)
      return load_binary_stream(in, path);
    in.clear();
    in.seekg(0);
    return load_jsonl_stream(in, path);
  }

 private:
  static EmbeddingStore load_jsonl_stream(std::istream& in,
                                          const std::string& path) {
    EmbeddingStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
          !rec.contains("embedding") || !rec["embedding"].is_array())
        throw error(path + ":" + std::to_string(line_no) +
                    ": malformed embedding record");
      EmbeddingVector vec;
      vec.reserve(rec["embedding"].size());
      for (const auto& v : rec["embedding"]) {
        if (!v.is_number())
          throw error(path + ":" + std::to_string(line_no) +
                      ": non-numeric embedding entry");
        vec.push_back(v.get<float>());
      }
      store.insert(rec["id"].get<std::string>(), std::move(vec));
    }
    return store;
  }

  static EmbeddingStore load_binary_stream(std::istream& in,
                                           const std::string& path) {
    EmbeddingStore store;
    std::uint32_t dim = 0;
    in.read(reinterpret_cast<char*>(&dim), 4);
    if (in.gcount() != 4 || dim == 0)
      throw error(path + ": bad binary embedding header");
    while (true) {
      std::uint16_t id_len = 0;
      in.read(reinterpret_cast<char*>(&id_len), 2);
      if (in.gcount() == 0) break;  // clean end of file
      if (in.gcount() != 2) throw error(path + ": truncated record header");
      std::string id(id_len, '\0');
      in.read(id.data(), id_len);
      if (in.gcount() != id_len) throw error(path + ": truncated record id");
      EmbeddingVector vec(dim);
      const auto payload = static_cast<std::streamsize>(dim * sizeof(float));
      in.read(reinterpret_cast<char*>(vec.data()), payload);
      if (in.gcount() != payload)
        throw error(path + ": truncated embedding payload for id " + id);
      store.insert(id, std::move(vec));
    }
    return store;
  }

  std::unordered_map<std::string, EmbeddingVector> vectors_;
  std::size_t dim_ = 0;
  std::string provider_;
};

inline EmbeddingStore load_embeddings(const std::string& path) {
  return EmbeddingStore::load(path);
}

}  // namespace neardup
