#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "neardup/message.hpp"
#include "neardup/unicode.hpp"

namespace neardup {

namespace detail {

inline bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

// Trim leading/trailing punctuation so that "(@bob)," still classifies
// as a mention. '#' and '@' are part of the token core.
inline std::string_view token_core(std::string_view token) {
  std::size_t lo = 0;
  std::size_t hi = token.size();
  auto is_edge = [](char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80) return false;  // leave non-ASCII alone
    return !is_word_char(c) && c != '#' && c != '@';
  };
  while (lo < hi && is_edge(token[lo])) ++lo;
  while (hi > lo && is_edge(token[hi - 1])) --hi;
  return token.substr(lo, hi - lo);
}

}  // namespace detail

// "@name" followed by word characters only.
inline bool is_mention_token(std::string_view token) {
  const auto core = detail::token_core(token);
  if (core.size() < 2 || core[0] != '@') return false;
  return std::all_of(core.begin() + 1, core.end(), detail::is_word_char);
}

// Scheme-prefixed URLs plus bare shortener-style tokens ("t.co/abc",
// "pic.twitter.com/xyz"): a dotted host immediately followed by a path.
inline bool is_url_token(std::string_view token) {
  const auto core = detail::token_core(token);
  if (core.empty()) return false;
  auto starts_with_nocase = [&](std::string_view prefix) {
    if (core.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      char c = core[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c != prefix[i]) return false;
    }
    return true;
  };
  if (starts_with_nocase("http://") || starts_with_nocase("https://") ||
      starts_with_nocase("www."))
    return true;
  const auto slash = core.find('/');
  if (slash == std::string_view::npos || slash == 0) return false;
  const auto host = core.substr(0, slash);
  const auto dot = host.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 >= host.size())
    return false;
  // TLD-ish tail: at least two ASCII letters.
  const auto tail = host.substr(dot + 1);
  if (tail.size() < 2) return false;
  for (char c : tail) {
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) return false;
  }
  return true;
}

// raw_text minus URL and @mention tokens, hashtags kept, whitespace
// collapsed to single spaces and trimmed.
inline std::string make_semantic_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  const std::u32string cps = unicode::decode_utf8(raw);
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::is_space(cps[i])) ++i;
    if (i >= cps.size()) break;
    std::size_t start = i;
    while (i < cps.size() && !unicode::is_space(cps[i])) ++i;
    std::string token = unicode::encode_utf8(
        std::u32string_view(cps.data() + start, i - start));
    if (is_url_token(token) || is_mention_token(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

// semantic_text reduced to Unicode letters and digits, lowercased.
// Everything else (punctuation, emoji, marks, whitespace) is dropped.
inline std::string make_grapheme_text(std::string_view semantic) {
  std::string out;
  out.reserve(semantic.size());
  for (char32_t cp : unicode::decode_utf8(semantic)) {
    if (unicode::is_alnum(cp)) unicode::append_utf8(out, unicode::to_lower(cp));
  }
  return out;
}

// Pure function of raw_text, hence idempotent.
inline Message normalize(Message msg) {
  msg.semantic_text = make_semantic_text(msg.raw_text);
  msg.grapheme_text = make_grapheme_text(msg.semantic_text);
  return msg;
}

inline void normalize_corpus(Corpus& corpus) {
  for (auto& m : corpus.messages) m = normalize(std::move(m));
}

inline std::size_t grapheme_length(const Message& msg) {
  return unicode::codepoint_count(msg.grapheme_text);
}

// Drops messages whose grapheme_text is shorter than min_letters
// codepoints. Keeps input order of survivors.
inline Corpus filter_short(Corpus corpus, std::size_t min_letters = 30) {
  std::vector<Message> kept;
  kept.reserve(corpus.messages.size());
  std::uint64_t removed = 0;
  for (auto& m : corpus.messages) {
    if (grapheme_length(m) >= min_letters)
      kept.push_back(std::move(m));
    else
      ++removed;
  }
  corpus.messages = std::move(kept);
  corpus.provenance.min_letters = static_cast<int>(min_letters);
  corpus.provenance.removed_short = removed;
  return corpus;
}

inline bool looks_like_retweet(const Message& msg) {
  return msg.is_retweet || msg.raw_text.rfind("RT @", 0) == 0;
}

// Removes retweets, using the source flag when present and the "RT @"
// prefix as a fallback. Keeps input order of survivors.
inline Corpus filter_retweets(Corpus corpus) {
  std::vector<Message> kept;
  kept.reserve(corpus.messages.size());
  std::uint64_t removed = 0;
  for (auto& m : corpus.messages) {
    if (looks_like_retweet(m))
      ++removed;
    else
      kept.push_back(std::move(m));
  }
  corpus.messages = std::move(kept);
  corpus.provenance.removed_retweets = removed;
  return corpus;
}

}  // namespace neardup
