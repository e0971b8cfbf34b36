#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "neardup/error.hpp"

namespace neardup {

// One social-media post. `raw_text` is the text as ingested;
// `semantic_text` has links and @mentions stripped (hashtags kept);
// `grapheme_text` is semantic_text reduced to lowercased letters and
// digits only. The normalized fields are empty until normalize() runs.
struct Message {
  std::string id;
  std::string account_id;
  std::string created_at;  // RFC 3339, kept verbatim
  std::string language = "und";
  std::string raw_text;
  std::string semantic_text;
  std::string grapheme_text;
  bool is_retweet = false;
};

struct Provenance {
  std::string source_path;
  std::string format;
  int min_letters = 0;
  std::uint64_t removed_retweets = 0;
  std::uint64_t removed_short = 0;
};

struct Corpus {
  std::vector<Message> messages;
  Provenance provenance;

  std::size_t size() const { return messages.size(); }

  // id -> index map; ids are unique by the ingest contract.
  std::unordered_map<std::string, std::size_t> id_index() const {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(messages.size());
    for (std::size_t i = 0; i < messages.size(); ++i) {
      if (!index.emplace(messages[i].id, i).second)
        throw error("duplicate message id: " + messages[i].id);
    }
    return index;
  }

  std::uint64_t distinct_accounts() const {
    std::unordered_map<std::string, bool> seen;
    for (const auto& m : messages) seen.emplace(m.account_id, true);
    return seen.size();
  }
};

// Unordered message pair, canonicalized so first_id < second_id.
struct PairKey {
  std::string first_id;
  std::string second_id;

  friend bool operator==(const PairKey& a, const PairKey& b) {
    return a.first_id == b.first_id && a.second_id == b.second_id;
  }
  friend bool operator<(const PairKey& a, const PairKey& b) {
    if (a.first_id != b.first_id) return a.first_id < b.first_id;
    return a.second_id < b.second_id;
  }
};

inline PairKey make_pair_key(const std::string& id_a, const std::string& id_b) {
  if (id_a == id_b) throw error("pair of a message with itself: " + id_a);
  if (id_a < id_b) return PairKey{id_a, id_b};
  return PairKey{id_b, id_a};
}

// Total cross-account pairs: C(n,2) minus same-account pairs.
inline std::uint64_t cross_account_pair_count(const Corpus& corpus) {
  const std::uint64_t n = corpus.messages.size();
  std::uint64_t total = n * (n - 1) / 2;
  std::unordered_map<std::string, std::uint64_t> per_account;
  for (const auto& m : corpus.messages) ++per_account[m.account_id];
  for (const auto& [account, count] : per_account)
    total -= count * (count - 1) / 2;
  return total;
}

// Streams every unordered cross-account pair exactly once, as index pairs
// (i, j) with i < j in corpus order. Read-only over an immutable corpus,
// so any number of streams may run concurrently.
class PairStream {
 public:
  explicit PairStream(const Corpus& corpus) : corpus_(&corpus) {}

  std::optional<std::pair<std::size_t, std::size_t>> next() {
    const auto& msgs = corpus_->messages;
    while (i_ + 1 < msgs.size()) {
      if (j_ <= i_) j_ = i_ + 1;
      while (j_ < msgs.size()) {
        const std::size_t j = j_++;
        if (msgs[i_].account_id != msgs[j].account_id) return {{i_, j}};
      }
      ++i_;
      j_ = i_ + 1;
    }
    return std::nullopt;
  }

  PairKey key(std::size_t i, std::size_t j) const {
    return make_pair_key(corpus_->messages[i].id, corpus_->messages[j].id);
  }

 private:
  const Corpus* corpus_;
  std::size_t i_ = 0;
  std::size_t j_ = 1;
};

}  // namespace neardup
