#pragma once

#include <algorithm>
#include <atomic>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "neardup/error.hpp"
#include "neardup/grapheme.hpp"
#include "neardup/language.hpp"
#include "neardup/message.hpp"
#include "neardup/semantic.hpp"

namespace neardup {

// Decision thresholds for the three distances. All comparisons are
// strict `<`; a distance equal to its threshold falls through to the
// next branch.
struct Thresholds {
  double tau_p = 0.31;  // grapheme
  double tau_s = 0.33;  // semantic
  double tau_l = 0.5;   // language (binary distance, any value in (0,1) works)
  GraphemeAlgorithm algorithm = GraphemeAlgorithm::lv;

  void validate() const {
    for (double t : {tau_p, tau_s, tau_l}) {
      if (!(t > 0.0 && t < 1.0))
        throw error("thresholds must lie strictly inside (0,1)");
    }
  }
};

enum class Label { copy_pasta, rewording, translation, no_match };

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::copy_pasta: return "copy_pasta";
    case Label::rewording: return "rewording";
    case Label::translation: return "translation";
    case Label::no_match: return "no_match";
  }
  return "?";
}

inline Label parse_label(std::string_view s) {
  if (s == "copy_pasta") return Label::copy_pasta;
  if (s == "rewording") return Label::rewording;
  if (s == "translation") return Label::translation;
  if (s == "no_match") return Label::no_match;
  throw error("unknown verdict label: " + std::string(s));
}

// Per-pair result. Distances are recorded only if the cascade computed
// them; a short-circuited branch leaves the later ones unset.
struct PairVerdict {
  PairKey pair;
  std::optional<double> d_grapheme;
  std::optional<double> d_semantic;
  std::optional<double> d_language;
  Label label = Label::no_match;
};

// Decision order for the cascade. `grapheme_first` is the literal
// inference algorithm: a graphemically near pair is Copy-Pasta without
// any semantic check. `semantic_first` gates every label on semantic
// proximity instead (semantic, then language, then grapheme), so a
// semantically distant near-string pair becomes NoMatch.
enum class CascadeOrder { grapheme_first, semantic_first };

namespace detail {

// Shared cascade over already-computed-on-demand distances. The
// grapheme distance is supplied lazily so corpus-level pruning can
// skip it; `grapheme_lower_bound_exceeds_tau` short-circuits the
// Copy-Pasta test when a lossless bound already rules it out.
template <typename GraphemeFn, typename SemanticFn, typename LanguageFn>
PairVerdict run_cascade(PairKey pair, const Thresholds& t, CascadeOrder order,
                        bool grapheme_lower_bound_exceeds_tau,
                        GraphemeFn&& grapheme, SemanticFn&& semantic,
                        LanguageFn&& language) {
  PairVerdict v;
  v.pair = std::move(pair);
  auto grapheme_below_tau = [&] {
    if (grapheme_lower_bound_exceeds_tau) return false;
    v.d_grapheme = grapheme();
    return *v.d_grapheme < t.tau_p;
  };
  if (order == CascadeOrder::grapheme_first) {
    if (grapheme_below_tau()) {
      v.label = Label::copy_pasta;
      return v;
    }
    v.d_semantic = semantic();
    if (*v.d_semantic < t.tau_s) {
      v.d_language = language();
      v.label = *v.d_language < t.tau_l ? Label::rewording : Label::translation;
    } else {
      v.label = Label::no_match;
    }
    return v;
  }
  v.d_semantic = semantic();
  if (*v.d_semantic >= t.tau_s) {
    v.label = Label::no_match;
    return v;
  }
  v.d_language = language();
  if (*v.d_language >= t.tau_l) {
    v.label = Label::translation;
    return v;
  }
  v.label = grapheme_below_tau() ? Label::copy_pasta : Label::rewording;
  return v;
}

}  // namespace detail

// Classifies one pair of normalized, embedded, language-tagged messages.
inline PairVerdict classify_pair(const Message& x1, std::span<const float> e1,
                                 const Message& x2, std::span<const float> e2,
                                 const Thresholds& t,
                                 CascadeOrder order = CascadeOrder::grapheme_first) {
  t.validate();
  return detail::run_cascade(
      make_pair_key(x1.id, x2.id), t, order, false,
      [&] { return grapheme_distance_tagged(x1, x2, t.algorithm).value; },
      [&] { return dist_semantic(e1, e2); },
      [&] { return dist_language(x1.language, x2.language); });
}

struct ClassifyOptions {
  bool emit_nomatch = false;
  CascadeOrder order = CascadeOrder::grapheme_first;
  bool prune = true;  // Levenshtein length pre-filter (lossless)
  std::size_t workers = 1;
};

// Runs the cascade over every cross-account pair. Missing embeddings
// are fatal before any pair is touched. Output is sorted by PairKey, so
// the result is byte-for-byte independent of the worker count.
//
// Pruning only ever skips a Levenshtein computation whose value is
// provably above tau_p; any skipped distance that would appear in an
// emitted verdict is recomputed on emission, so pruned and unpruned
// runs produce identical output.
inline std::vector<PairVerdict> classify_corpus(const Corpus& corpus,
                                                const EmbeddingStore& store,
                                                const Thresholds& t,
                                                const ClassifyOptions& options = {}) {
  t.validate();
  {
    std::vector<std::string> missing;
    for (const auto& m : corpus.messages)
      if (!store.contains(m.id)) missing.push_back(m.id);
    if (!missing.empty()) {
      std::string ids;
      for (const auto& id : missing) {
        if (!ids.empty()) ids += ", ";
        ids += id;
      }
      throw error("missing embeddings for " + std::to_string(missing.size()) +
                  " message(s): " + ids);
    }
  }

  const std::size_t n = corpus.messages.size();
  std::vector<PreparedMessage> prepared;
  prepared.reserve(n);
  std::vector<std::span<const float>> vectors;
  vectors.reserve(n);
  for (const auto& m : corpus.messages) {
    prepared.push_back(prepare_message(m, t.algorithm));
    vectors.push_back(store.at(m.id));
  }

  const bool can_prune =
      options.prune && t.algorithm == GraphemeAlgorithm::lv;

  auto classify_indices = [&](std::size_t i, std::size_t j) {
    const Message& m1 = corpus.messages[i];
    const Message& m2 = corpus.messages[j];
    const bool pruned =
        can_prune && prune_by_length(prepared[i].graphemes.size(),
                                     prepared[j].graphemes.size(), t.tau_p);
    PairVerdict v = detail::run_cascade(
        make_pair_key(m1.id, m2.id), t, options.order, pruned,
        [&] { return grapheme_distance(prepared[i], prepared[j], t.algorithm); },
        [&] { return dist_semantic(vectors[i], vectors[j]); },
        [&] { return dist_language(m1.language, m2.language); });
    if (pruned && !v.d_grapheme) {
      // Fill in what the unpruned cascade would have recorded.
      const bool unpruned_would_compute =
          options.order == CascadeOrder::grapheme_first ||
          (v.d_language && *v.d_language < t.tau_l);
      const bool emitted = options.emit_nomatch || v.label != Label::no_match;
      if (unpruned_would_compute && emitted)
        v.d_grapheme =
            grapheme_distance(prepared[i], prepared[j], t.algorithm);
    }
    return v;
  };

  const std::size_t workers = std::max<std::size_t>(1, options.workers);
  std::vector<std::vector<PairVerdict>> partials(workers);

  // Dynamic partition over the first index; each worker owns the full
  // j-range of the rows it claims.
  std::atomic<std::size_t> next_row{0};
  auto run_worker = [&](std::size_t w) {
    auto& out = partials[w];
    while (true) {
      const std::size_t i = next_row.fetch_add(1);
      if (i + 1 >= n) return;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (corpus.messages[i].account_id == corpus.messages[j].account_id)
          continue;
        PairVerdict v = classify_indices(i, j);
        if (options.emit_nomatch || v.label != Label::no_match)
          out.push_back(std::move(v));
      }
    }
  };

  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(run_worker, w);
    for (auto& th : pool) th.join();
  }

  std::size_t total = 0;
  for (const auto& p : partials) total += p.size();
  std::vector<PairVerdict> verdicts;
  verdicts.reserve(total);
  for (auto& p : partials)
    for (auto& v : p) verdicts.push_back(std::move(v));
  std::sort(verdicts.begin(), verdicts.end(),
            [](const PairVerdict& a, const PairVerdict& b) {
              return a.pair < b.pair;
            });
  return verdicts;
}

// ---------------------------------------------------------------------------
// Verdict serialization

inline nlohmann::json verdict_to_json(const PairVerdict& v) {
  auto opt = [](const std::optional<double>& d) {
    return d ? nlohmann::json(*d) : nlohmann::json(nullptr);
  };
  return nlohmann::json{{"a", v.pair.first_id},
                        {"b", v.pair.second_id},
                        {"label", std::string(to_string(v.label))},
                        {"d_grapheme", opt(v.d_grapheme)},
                        {"d_semantic", opt(v.d_semantic)},
                        {"d_language", opt(v.d_language)}};
}

inline void write_verdicts_jsonl(const std::vector<PairVerdict>& verdicts,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open output file: " + path);
  for (const auto& v : verdicts) out << verdict_to_json(v) << '\n';
  if (!out) throw error("write failed: " + path);
}

inline std::vector<PairVerdict> read_verdicts_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open verdicts file: " + path);
  std::vector<PairVerdict> verdicts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("a") || !rec.contains("b") ||
        !rec.contains("label"))
      throw error(path + ":" + std::to_string(line_no) +
                  ": malformed verdict record");
    PairVerdict v;
    v.pair = make_pair_key(rec["a"].get<std::string>(),
                           rec["b"].get<std::string>());
    v.label = parse_label(rec["label"].get<std::string>());
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!rec.contains(key) || rec[key].is_null()) return std::nullopt;
      return rec[key].get<double>();
    };
    v.d_grapheme = opt("d_grapheme");
    v.d_semantic = opt("d_semantic");
    v.d_language = opt("d_language");
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

}  // namespace neardup
