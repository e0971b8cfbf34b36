#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "neardup/error.hpp"
#include "neardup/message.hpp"
#include "neardup/unicode.hpp"

namespace neardup {

// The five string distances, keyed by their report tags.
enum class GraphemeAlgorithm { lv, ro, gz, bg_w, bg_l };

inline constexpr GraphemeAlgorithm kAllGraphemeAlgorithms[] = {
    GraphemeAlgorithm::lv, GraphemeAlgorithm::ro, GraphemeAlgorithm::gz,
    GraphemeAlgorithm::bg_w, GraphemeAlgorithm::bg_l};

inline std::string_view to_string(GraphemeAlgorithm a) {
  switch (a) {
    case GraphemeAlgorithm::lv: return "lv";
    case GraphemeAlgorithm::ro: return "ro";
    case GraphemeAlgorithm::gz: return "gz";
    case GraphemeAlgorithm::bg_w: return "bg_w";
    case GraphemeAlgorithm::bg_l: return "bg_l";
  }
  return "?";
}

inline GraphemeAlgorithm parse_grapheme_algorithm(std::string_view tag) {
  for (auto a : kAllGraphemeAlgorithms)
    if (to_string(a) == tag) return a;
  throw error("unknown grapheme algorithm tag: " + std::string(tag));
}

struct GraphemeDistance {
  double value = 0.0;  // in [0,1], 0 = identical
  GraphemeAlgorithm algorithm = GraphemeAlgorithm::lv;
};

// ---------------------------------------------------------------------------
// Levenshtein

// Unit-cost edit distance (insert, delete, substitute) over codepoints.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  // Strip common prefix and suffix; they never participate in an
  // optimal edit script under unit costs.
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a.size() < b.size()) std::swap(a, b);

  thread_local std::vector<std::uint32_t> row;
  row.resize(b.size() + 1);
  for (std::uint32_t j = 0; j <= b.size(); ++j) row[j] = j;

  for (std::size_t i = 0; i < a.size(); ++i) {
    std::uint32_t diag = row[0];
    row[0] = static_cast<std::uint32_t>(i + 1);
    const char32_t ca = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::uint32_t up = row[j + 1];
      std::uint32_t cost;
      if (ca == b[j]) {
        cost = diag;
      } else {
        cost = std::min(std::min(up, row[j]), diag) + 1;
      }
      diag = up;
      row[j + 1] = cost;
    }
  }
  return row[b.size()];
}

// lv / max(len). Two empty strings are identical by definition (0).
inline double dist_levenshtein(std::u32string_view a, std::u32string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

inline double dist_levenshtein(std::string_view a_utf8,
                               std::string_view b_utf8) {
  return dist_levenshtein(unicode::decode_utf8(a_utf8),
                          unicode::decode_utf8(b_utf8));
}

// ---------------------------------------------------------------------------
// Ratcliff-Obershelp

namespace detail {

struct MatchBlock {
  std::size_t i = 0, j = 0, size = 0;
};

// Longest common substring of a[alo,ahi) x b[blo,bhi), ties broken by
// smallest i then smallest j. Rolling row over b, scanned right-to-left
// so row[j-1] still holds the previous a-index values.
inline MatchBlock longest_match(std::u32string_view a, std::u32string_view b,
                                std::size_t alo, std::size_t ahi,
                                std::size_t blo, std::size_t bhi,
                                std::vector<std::uint32_t>& row) {
  MatchBlock best{alo, blo, 0};
  const std::size_t width = bhi - blo;
  row.assign(width, 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    const char32_t ca = a[i];
    for (std::size_t j = bhi; j-- > blo;) {
      const std::size_t idx = j - blo;
      if (ca == b[j]) {
        const std::uint32_t len = (idx > 0 ? row[idx - 1] : 0u) + 1u;
        row[idx] = len;
        if (len > best.size) {
          best.size = len;
          best.i = i + 1 - len;
          best.j = j + 1 - len;
        }
      } else {
        row[idx] = 0;
      }
    }
  }
  return best;
}

// Total matched characters of the recursive longest-common-substring
// decomposition, iteratively with an explicit range stack.
inline std::size_t ratcliff_matched(std::u32string_view a,
                                    std::u32string_view b) {
  std::size_t total = 0;
  thread_local std::vector<std::uint32_t> row;
  std::vector<std::array<std::size_t, 4>> stack;
  stack.push_back({0, a.size(), 0, b.size()});
  while (!stack.empty()) {
    const auto [alo, ahi, blo, bhi] = stack.back();
    stack.pop_back();
    if (alo >= ahi || blo >= bhi) continue;
    const MatchBlock m = longest_match(a, b, alo, ahi, blo, bhi, row);
    if (m.size == 0) continue;
    total += m.size;
    stack.push_back({alo, m.i, blo, m.j});
    stack.push_back({m.i + m.size, ahi, m.j + m.size, bhi});
  }
  return total;
}

}  // namespace detail

// 1 - 2*M / (len1+len2). The classic formulation is sensitive to the
// argument order; we symmetrize by taking the larger matched total of
// both orders so the distance works as an undirected edge weight.
inline double dist_ratcliff_obershelp(std::u32string_view a,
                                      std::u32string_view b) {
  const std::size_t total_len = a.size() + b.size();
  if (total_len == 0) return 0.0;
  const std::size_t matched = std::max(detail::ratcliff_matched(a, b),
                                       detail::ratcliff_matched(b, a));
  return 1.0 - 2.0 * static_cast<double>(matched) /
                   static_cast<double>(total_len);
}

inline double dist_ratcliff_obershelp(std::string_view a_utf8,
                                      std::string_view b_utf8) {
  return dist_ratcliff_obershelp(unicode::decode_utf8(a_utf8),
                                 unicode::decode_utf8(b_utf8));
}

// ---------------------------------------------------------------------------
// Compression distance

// Fixed compression level so reported sizes are reproducible across runs.
inline constexpr int kDeflateLevel = 6;

// Byte length of the raw DEFLATE stream (no gzip/zlib container) of the
// input at the fixed level. One z_stream per thread, reset per call.
inline std::size_t deflate_size(std::string_view bytes) {
  struct Stream {
    z_stream zs{};
    std::vector<unsigned char> buf;
    Stream() {
      if (deflateInit2(&zs, kDeflateLevel, Z_DEFLATED, /*windowBits=*/-15,
                       /*memLevel=*/8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw error("deflateInit2 failed");
    }
    ~Stream() { deflateEnd(&zs); }
  };
  thread_local Stream s;
  deflateReset(&s.zs);
  const uLong bound = deflateBound(&s.zs, static_cast<uLong>(bytes.size()));
  if (s.buf.size() < bound) s.buf.resize(bound);
  s.zs.next_in =
      reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  s.zs.avail_in = static_cast<uInt>(bytes.size());
  s.zs.next_out = s.buf.data();
  s.zs.avail_out = static_cast<uInt>(s.buf.size());
  if (deflate(&s.zs, Z_FINISH) != Z_STREAM_END)
    throw error("deflate did not finish");
  return static_cast<std::size_t>(s.zs.total_out);
}

// NCD with precomputed single-string sizes; the concatenation is always
// smaller-string-first so both argument orders yield the same value.
inline double dist_gzip_with_sizes(std::string_view a, std::size_t gz_a,
                                   std::string_view b, std::size_t gz_b) {
  if (b < a) {
    std::swap(a, b);
    std::swap(gz_a, gz_b);
  }
  std::string concat;
  concat.reserve(a.size() + b.size());
  concat.append(a).append(b);
  const std::size_t gz_ab = deflate_size(concat);
  const std::size_t lo = std::min(gz_a, gz_b);
  const std::size_t hi = std::max(gz_a, gz_b);
  if (hi == 0) return 0.0;
  const double ncd = (static_cast<double>(gz_ab) - static_cast<double>(lo)) /
                     static_cast<double>(hi);
  return std::clamp(ncd, 0.0, 1.0);
}

inline double dist_gzip(std::string_view a_utf8, std::string_view b_utf8) {
  return dist_gzip_with_sizes(a_utf8, deflate_size(a_utf8), b_utf8,
                              deflate_size(b_utf8));
}

// ---------------------------------------------------------------------------
// Bigram distances

enum class BigramUnit { word, letter };

namespace detail {

// Sorted multiset of word bigrams, each encoded unambiguously as
// "<len(first)>:<first><second>".
inline std::vector<std::string> word_bigrams(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && static_cast<unsigned char>(text[i]) <= ' ') ++i;
    std::size_t start = i;
    while (i < text.size() && static_cast<unsigned char>(text[i]) > ' ') ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  std::vector<std::string> bigrams;
  if (tokens.size() >= 2) {
    bigrams.reserve(tokens.size() - 1);
    for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
      std::string key = std::to_string(tokens[k].size());
      key.push_back(':');
      key.append(tokens[k]);
      key.append(tokens[k + 1]);
      bigrams.push_back(std::move(key));
    }
    std::sort(bigrams.begin(), bigrams.end());
  }
  return bigrams;
}

// Sorted multiset of codepoint bigrams packed into one u64 each.
inline std::vector<std::uint64_t> letter_bigrams(std::u32string_view cps) {
  std::vector<std::uint64_t> bigrams;
  if (cps.size() >= 2) {
    bigrams.reserve(cps.size() - 1);
    for (std::size_t k = 0; k + 1 < cps.size(); ++k)
      bigrams.push_back((static_cast<std::uint64_t>(cps[k]) << 32) |
                        static_cast<std::uint64_t>(cps[k + 1]));
    std::sort(bigrams.begin(), bigrams.end());
  }
  return bigrams;
}

// sum|c1-c2| / sum(c1+c2) over the union of bigrams, via a two-pointer
// merge of the sorted multisets.
template <typename T>
double bigram_tally_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::size_t ia = 0, ib = 0;
  std::uint64_t diff = 0;
  const std::uint64_t total = a.size() + b.size();
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) {
      const T& v = a[ia];
      std::size_t ca = 0, cb = 0;
      while (ia < a.size() && a[ia] == v) ++ia, ++ca;
      while (ib < b.size() && b[ib] == v) ++ib, ++cb;
      diff += ca > cb ? ca - cb : cb - ca;
    } else if (a[ia] < b[ib]) {
      const T& v = a[ia];
      while (ia < a.size() && a[ia] == v) ++ia, ++diff;
    } else {
      const T& v = b[ib];
      while (ib < b.size() && b[ib] == v) ++ib, ++diff;
    }
  }
  diff += a.size() - ia;
  diff += b.size() - ib;
  return static_cast<double>(diff) / static_cast<double>(total);
}

}  // namespace detail

// Scaled L1 distance between bigram tallies: 0 iff the multisets agree,
// 1 iff they are disjoint. Word bigrams split on whitespace; letter
// bigrams pair consecutive codepoints. Inputs that yield no bigram at
// all are an error, never a silent 0.
inline double dist_bigram(std::string_view x1, std::string_view x2,
                          BigramUnit unit) {
  if (unit == BigramUnit::word) {
    const auto b1 = detail::word_bigrams(x1);
    const auto b2 = detail::word_bigrams(x2);
    if (b1.empty() || b2.empty())
      throw insufficient_bigrams(
          "word-bigram distance needs at least 2 tokens per string");
    return detail::bigram_tally_distance(b1, b2);
  }
  const auto b1 = detail::letter_bigrams(unicode::decode_utf8(x1));
  const auto b2 = detail::letter_bigrams(unicode::decode_utf8(x2));
  if (b1.empty() || b2.empty())
    throw insufficient_bigrams(
        "letter-bigram distance needs at least 2 codepoints per string");
  return detail::bigram_tally_distance(b1, b2);
}

// ---------------------------------------------------------------------------
// Length pruning

// True when the length gap alone guarantees a normalized Levenshtein
// distance above tau_p, since lv(x1,x2) >= |len1-len2|. Never skips a
// pair whose distance could be <= tau_p.
inline bool prune_by_length(std::size_t len1, std::size_t len2, double tau_p) {
  const std::size_t longest = std::max(len1, len2);
  if (longest == 0) return false;
  const std::size_t gap = len1 > len2 ? len1 - len2 : len2 - len1;
  return static_cast<double>(gap) / static_cast<double>(longest) > tau_p;
}

// ---------------------------------------------------------------------------
// Per-message precomputation for all-pairs loops

// Decoded/derived views of one message, so pair loops do not re-decode
// or re-tokenize. Views point into the owning Message; keep it alive.
struct PreparedMessage {
  std::u32string graphemes;
  std::string_view grapheme_bytes;
  std::string_view semantic;
  std::size_t gz_size = 0;
  std::vector<std::string> word_bigrams;
  std::vector<std::uint64_t> letter_bigrams;
};

inline PreparedMessage prepare_message(const Message& m,
                                       GraphemeAlgorithm algo) {
  PreparedMessage p;
  p.graphemes = unicode::decode_utf8(m.grapheme_text);
  p.grapheme_bytes = m.grapheme_text;
  p.semantic = m.semantic_text;
  switch (algo) {
    case GraphemeAlgorithm::gz:
      p.gz_size = deflate_size(p.grapheme_bytes);
      break;
    case GraphemeAlgorithm::bg_w:
      p.word_bigrams = detail::word_bigrams(p.semantic);
      break;
    case GraphemeAlgorithm::bg_l:
      p.letter_bigrams = detail::letter_bigrams(p.graphemes);
      break;
    default:
      break;
  }
  return p;
}

// Word bigrams look at semantic_text (grapheme_text has no spaces left);
// every other algorithm works on the stripped grapheme_text.
inline double grapheme_distance(const PreparedMessage& a,
                                const PreparedMessage& b,
                                GraphemeAlgorithm algo) {
  switch (algo) {
    case GraphemeAlgorithm::lv:
      return dist_levenshtein(a.graphemes, b.graphemes);
    case GraphemeAlgorithm::ro:
      return dist_ratcliff_obershelp(a.graphemes, b.graphemes);
    case GraphemeAlgorithm::gz:
      return dist_gzip_with_sizes(a.grapheme_bytes, a.gz_size,
                                  b.grapheme_bytes, b.gz_size);
    case GraphemeAlgorithm::bg_w:
      if (a.word_bigrams.empty() || b.word_bigrams.empty())
        throw insufficient_bigrams(
            "word-bigram distance needs at least 2 tokens per string");
      return detail::bigram_tally_distance(a.word_bigrams, b.word_bigrams);
    case GraphemeAlgorithm::bg_l:
      if (a.letter_bigrams.empty() || b.letter_bigrams.empty())
        throw insufficient_bigrams(
            "letter-bigram distance needs at least 2 codepoints per string");
      return detail::bigram_tally_distance(a.letter_bigrams, b.letter_bigrams);
  }
  throw error("unreachable grapheme algorithm");
}

inline GraphemeDistance grapheme_distance_tagged(const Message& m1,
                                                 const Message& m2,
                                                 GraphemeAlgorithm algo) {
  const auto p1 = prepare_message(m1, algo);
  const auto p2 = prepare_message(m2, algo);
  return GraphemeDistance{grapheme_distance(p1, p2, algo), algo};
}

}  // namespace neardup
