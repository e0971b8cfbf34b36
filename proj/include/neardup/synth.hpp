#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "neardup/corpus_io.hpp"
#include "neardup/eval.hpp"
#include "neardup/grapheme.hpp"
#include "neardup/message.hpp"
#include "neardup/normalize.hpp"
#include "neardup/rng.hpp"
#include "neardup/semantic.hpp"

namespace neardup {
namespace synth {

// Fully scripted stand-in for generated/translated fixtures: seeds are
// random word sentences; copy-pastas apply bounded cosmetic edits;
// rewordings shuffle word order and swap in synonyms; translations map
// every word through a dictionary and change the language tag.
// Embeddings are fixture values: variants reuse their seed's vector,
// control pairs get exactly orthogonal vectors.
struct SynthConfig {
  std::uint64_t seed = kDefaultSeed;
  std::size_t n_seeds = 100;
  std::size_t variants_per_class = 10;
  std::size_t n_control_pairs = 1000;
  std::size_t embed_dim = 32;
  std::size_t min_seed_letters = 60;
  double max_copypasta_edit_fraction = 0.15;
  double synonym_rate = 0.7;
};

struct SynthDataset {
  std::vector<LabeledPair> pairs;
  Corpus corpus;        // every message, each under its own account
  EmbeddingStore store;  // one fixture vector per message id
};

namespace detail {

// Aligned triples: base vocabulary, a same-language synonym with a
// clearly different spelling, and a pseudo-foreign counterpart.
struct WordTriple {
  std::string_view base, synonym, foreign;
};

inline constexpr std::array<WordTriple, 96> kVocabulary{{
    {"people", "citizens", "gentevolia"},
    {"support", "backing", "apoyardo"},
    {"message", "statement", "mensarelo"},
    {"campaign", "initiative", "campanila"},
    {"country", "nation", "paisolme"},
    {"freedom", "liberty", "libertazzo"},
    {"justice", "fairness", "justiviera"},
    {"leader", "chief", "liderenzo"},
    {"truth", "honesty", "verdamilo"},
    {"change", "reform", "cambiore"},
    {"future", "tomorrow", "futurala"},
    {"community", "neighborhood", "comunidazze"},
    {"victory", "triumph", "victorenza"},
    {"election", "ballot", "eleccivola"},
    {"government", "administration", "gobernimo"},
    {"economy", "market", "economeda"},
    {"family", "household", "familore"},
    {"worker", "laborer", "obrerinto"},
    {"student", "pupil", "estudiaro"},
    {"teacher", "instructor", "maestrilo"},
    {"doctor", "physician", "doctorame"},
    {"street", "avenue", "callevira"},
    {"city", "town", "ciudazzo"},
    {"water", "liquid", "aguarela"},
    {"energy", "power", "energivo"},
    {"music", "melody", "musicaro"},
    {"night", "evening", "nochelma"},
    {"morning", "daybreak", "mananilo"},
    {"friend", "companion", "amigovar"},
    {"world", "globe", "mundarelo"},
    {"history", "past", "historeza"},
    {"moment", "instant", "momentilo"},
    {"question", "query", "preguntora"},
    {"answer", "reply", "respuelta"},
    {"problem", "trouble", "problavar"},
    {"solution", "remedy", "solucique"},
    {"idea", "concept", "idearemo"},
    {"project", "venture", "proyectilo"},
    {"company", "firm", "empresola"},
    {"school", "academy", "escuelino"},
    {"house", "dwelling", "casarione"},
    {"garden", "yard", "jardinelo"},
    {"mountain", "peak", "montanaro"},
    {"river", "stream", "riovelado"},
    {"forest", "woodland", "bosquemir"},
    {"animal", "creature", "animaleta"},
    {"winter", "coldtime", "inviernazo"},
    {"summer", "hotseason", "veranillo"},
    {"travel", "journey", "viajorane"},
    {"market", "bazaar", "mercavilo"},
    {"price", "cost", "precioma"},
    {"money", "currency", "dinerazzo"},
    {"letter", "note", "cartaviel"},
    {"number", "figure", "numerado"},
    {"table", "desk", "mesarillo"},
    {"window", "pane", "ventanola"},
    {"picture", "image", "fotovilar"},
    {"story", "tale", "cuentomil"},
    {"voice", "tone", "vozalira"},
    {"silence", "quiet", "silencava"},
    {"danger", "hazard", "peligrone"},
    {"safety", "security", "seguranto"},
    {"health", "wellness", "saludiera"},
    {"strength", "force", "fuerzolo"},
    {"beauty", "grace", "bellezima"},
    {"courage", "bravery", "corajilo"},
    {"wisdom", "insight", "sabidorme"},
    {"hope", "optimism", "esperavi"},
    {"dream", "vision", "suenorelo"},
    {"light", "glow", "luzmarilo"},
    {"shadow", "darkness", "sombravel"},
    {"weather", "climate", "climarone"},
    {"island", "atoll", "islavetta"},
    {"bridge", "crossing", "puentillo"},
    {"train", "railcar", "trenovilo"},
    {"meadow", "field", "pradovila"},
    {"coffee", "brew", "cafelino"},
    {"bread", "loaf", "panecillo"},
    {"dinner", "supper", "cenarolo"},
    {"evening", "dusk", "tardecilla"},
    {"holiday", "vacation", "feriadolo"},
    {"journal", "diary", "diariome"},
    {"library", "archive", "bibliorma"},
    {"theater", "playhouse", "teatrillo"},
    {"airport", "terminal", "aeropilo"},
    {"harbor", "port", "puertomil"},
    {"castle", "fortress", "castivelo"},
    {"village", "hamlet", "aldeorina"},
    {"farmer", "grower", "granjerilo"},
    {"singer", "vocalist", "cantorelo"},
    {"painter", "artist", "pintorave"},
    {"writer", "author", "escritomo"},
    {"runner", "sprinter", "corredilo"},
    {"winner", "champion", "ganadorme"},
    {"harvest", "crop", "cosechilo"},
    {"minister", "official", "ministrelo"},
}};

inline constexpr std::array<std::string_view, 5> kLanguages{"en", "es", "fr",
                                                            "de", "pt"};

inline std::string_view random_base_word(Rng& rng) {
  return kVocabulary[rng.index(kVocabulary.size())].base;
}

// Sentence of base words totalling at least `min_letters` graphemes,
// capitalized and terminated like ordinary prose.
inline std::string make_sentence(Rng& rng, std::size_t min_letters) {
  std::vector<std::string_view> words;
  std::size_t letters = 0;
  while (letters < min_letters) {
    const auto w = random_base_word(rng);
    words.push_back(w);
    letters += w.size();
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) text.push_back(' ');
    text.append(words[i]);
  }
  if (!text.empty()) text[0] = static_cast<char>(text[0] - 'a' + 'A');
  text.push_back('.');
  return text;
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string word;
  for (char c : text) {
    if (c == ' ') {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
    } else {
      word.push_back(c);
    }
  }
  if (!word.empty()) words.push_back(std::move(word));
  return words;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out.append(words[i]);
  }
  return out;
}

// Strips the sentence dressing so table lookups work on bare words.
inline std::string bare(std::string word) {
  while (!word.empty() && (word.back() == '.' || word.back() == ',' ||
                           word.back() == '!'))
    word.pop_back();
  if (!word.empty() && word[0] >= 'A' && word[0] <= 'Z')
    word[0] = static_cast<char>(word[0] - 'A' + 'a');
  return word;
}

inline std::string_view lookup(std::string_view base_word, bool foreign) {
  for (const auto& t : kVocabulary) {
    if (t.base == base_word) return foreign ? t.foreign : t.synonym;
  }
  return base_word;  // not in the table: keep as-is
}

inline double grapheme_edit_fraction(const std::string& a,
                                     const std::string& b) {
  return dist_levenshtein(make_grapheme_text(make_semantic_text(a)),
                          make_grapheme_text(make_semantic_text(b)));
}

// Cosmetic copy-pasta edits: hashtag tails, emoji/punctuation churn and
// at most one single-word swap, re-rolled until the grapheme edit
// fraction stays within the configured bound.
inline std::string make_copypasta(const std::string& seed_text, Rng& rng,
                                  double max_fraction) {
  for (int attempt = 0; attempt < 24; ++attempt) {
    std::string variant = seed_text;
    const int n_ops = 1 + static_cast<int>(rng.below(3));
    for (int op = 0; op < n_ops; ++op) {
      switch (rng.below(5)) {
        case 0: {  // hashtag append
          variant += " #";
          variant += random_base_word(rng);
          break;
        }
        case 1:  // emoji churn, invisible to the grapheme text
          variant += rng.chance(0.5) ? " 😀" : " 🔥🔥";
          break;
        case 2:  // punctuation churn
          variant += rng.chance(0.5) ? "!!!" : "…";
          break;
        case 3: {  // leading decoration
          variant.insert(0, rng.chance(0.5) ? "¡" : "** ");
          break;
        }
        default: {  // single-word swap
          auto words = split_words(variant);
          if (!words.empty()) {
            const std::size_t at = rng.index(words.size());
            words[at] = std::string(random_base_word(rng));
            variant = join_words(words);
          }
          break;
        }
      }
    }
    if (grapheme_edit_fraction(seed_text, variant) <= max_fraction)
      return variant;
  }
  return seed_text + " 😀";  // zero-edit fallback, always within bound
}

// Word-order shuffle plus synonym substitution; same language.
inline std::string make_rewording(const std::string& seed_text, Rng& rng,
                                  double synonym_rate) {
  auto words = split_words(seed_text);
  for (auto& w : words) {
    if (rng.chance(synonym_rate)) w = std::string(lookup(bare(w), false));
  }
  for (std::size_t i = words.size(); i > 1; --i)
    std::swap(words[i - 1], words[rng.index(i)]);
  return join_words(words);
}

// Dictionary substitution of every word.
inline std::string make_translation(const std::string& seed_text) {
  auto words = split_words(seed_text);
  for (auto& w : words) w = std::string(lookup(bare(w), true));
  return join_words(words) + ".";
}

inline EmbeddingVector random_unit_vector(Rng& rng, std::size_t dim) {
  EmbeddingVector v(dim);
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (auto& x : v) {
      x = static_cast<float>(rng.normal());
      norm_sq += static_cast<double>(x) * x;
    }
  } while (norm_sq == 0.0);
  const auto inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
  for (auto& x : v) x *= inv;
  return v;
}

// Unit vector exactly orthogonal to `other` (Gram-Schmidt in double).
inline EmbeddingVector orthogonal_unit_vector(Rng& rng,
                                              const EmbeddingVector& other) {
  while (true) {
    EmbeddingVector v = random_unit_vector(rng, other.size());
    double dot = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      dot += static_cast<double>(v[i]) * other[i];
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = static_cast<float>(v[i] - dot * other[i]);
      norm_sq += static_cast<double>(v[i]) * v[i];
    }
    if (norm_sq < 1e-6) continue;  // re-draw the rare near-parallel case
    const auto inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (auto& x : v) x *= inv;
    return v;
  }
}

inline std::string synth_timestamp(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "2021-03-%02zuT%02zu:%02zu:%02zuZ",
                1 + (index / 86400) % 28, (index / 3600) % 24,
                (index / 60) % 60, index % 60);
  return buf;
}

}  // namespace detail

inline SynthDataset generate(const SynthConfig& config = {}) {
  SynthDataset data;
  data.store.set_provider("fixture");
  Rng rng(config.seed);
  std::size_t msg_counter = 0;

  // Returns a copy: the corpus vector reallocates as it grows.
  auto add_message = [&](std::string id, const std::string& text,
                         std::string_view lang,
                         const EmbeddingVector& vec) -> Message {
    Message m;
    m.id = std::move(id);
    m.account_id = "u_" + m.id;
    m.created_at = detail::synth_timestamp(msg_counter++);
    m.language = std::string(lang);
    m.raw_text = text;
    m = normalize(std::move(m));
    data.store.insert(m.id, vec);
    data.corpus.messages.push_back(m);
    return m;
  };

  char idbuf[48];
  for (std::size_t s = 0; s < config.n_seeds; ++s) {
    const std::string seed_text =
        detail::make_sentence(rng, config.min_seed_letters);
    const auto lang = detail::kLanguages[s % detail::kLanguages.size()];
    const EmbeddingVector seed_vec =
        detail::random_unit_vector(rng, config.embed_dim);

    std::snprintf(idbuf, sizeof idbuf, "s%03zu", s);
    const Message seed_msg = add_message(idbuf, seed_text, lang, seed_vec);

    for (std::size_t k = 0; k < config.variants_per_class; ++k) {
      std::snprintf(idbuf, sizeof idbuf, "s%03zu_cp%02zu", s, k);
      const std::string text = detail::make_copypasta(
          seed_text, rng, config.max_copypasta_edit_fraction);
      data.pairs.push_back(
          {seed_msg, add_message(idbuf, text, lang, seed_vec),
           TruthLabel::copy_pasta});
    }
    for (std::size_t k = 0; k < config.variants_per_class; ++k) {
      std::snprintf(idbuf, sizeof idbuf, "s%03zu_rw%02zu", s, k);
      const std::string text =
          detail::make_rewording(seed_text, rng, config.synonym_rate);
      data.pairs.push_back(
          {seed_msg, add_message(idbuf, text, lang, seed_vec),
           TruthLabel::rewording});
    }
    for (std::size_t k = 0; k < config.variants_per_class; ++k) {
      std::snprintf(idbuf, sizeof idbuf, "s%03zu_tr%02zu", s, k);
      const std::string text = detail::make_translation(seed_text);
      const auto target_lang =
          detail::kLanguages[(s + 1 + k % (detail::kLanguages.size() - 1)) %
                             detail::kLanguages.size()];
      data.pairs.push_back(
          {seed_msg, add_message(idbuf, text, target_lang, seed_vec),
           TruthLabel::translation});
    }
  }

  for (std::size_t c = 0; c < config.n_control_pairs; ++c) {
    const std::string text_a =
        detail::make_sentence(rng, config.min_seed_letters);
    const std::string text_b =
        detail::make_sentence(rng, config.min_seed_letters);
    const auto lang_a = detail::kLanguages[rng.index(detail::kLanguages.size())];
    const auto lang_b = detail::kLanguages[rng.index(detail::kLanguages.size())];
    const EmbeddingVector vec_a =
        detail::random_unit_vector(rng, config.embed_dim);
    const EmbeddingVector vec_b = detail::orthogonal_unit_vector(rng, vec_a);
    std::snprintf(idbuf, sizeof idbuf, "c%04zu_a", c);
    const Message a = add_message(idbuf, text_a, lang_a, vec_a);
    std::snprintf(idbuf, sizeof idbuf, "c%04zu_b", c);
    const Message b = add_message(idbuf, text_b, lang_b, vec_b);
    data.pairs.push_back({a, b, TruthLabel::control});
  }

  data.corpus.provenance.source_path = "synthetic";
  data.corpus.provenance.format = "generated";
  return data;
}

inline void write_labeled_pairs_jsonl(const std::vector<LabeledPair>& pairs,
                                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open output file: " + path);
  for (const auto& p : pairs) {
    out << nlohmann::json{{"text_a", p.a.raw_text}, {"text_b", p.b.raw_text},
                          {"lang_a", p.a.language},  {"lang_b", p.b.language},
                          {"truth", std::string(to_string(p.truth))},
                          {"id_a", p.a.id},          {"id_b", p.b.id}}
        << '\n';
  }
  if (!out) throw error("write failed: " + path);
}

// Random substitutions at distinct positions with guaranteed-different
// characters; used to build fixtures with a known edit budget.
inline std::u32string substitute_random(std::u32string text, std::size_t count,
                                        Rng& rng) {
  static constexpr char32_t kAlphabet[] = U"abcdefghijklmnopqrstuvwxyz";
  if (text.empty()) return text;
  std::vector<std::size_t> positions(text.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  for (std::size_t i = positions.size(); i > 1; --i)
    std::swap(positions[i - 1], positions[rng.index(i)]);
  count = std::min(count, text.size());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t at = positions[k];
    char32_t replacement = text[at];
    while (replacement == text[at])
      replacement = kAlphabet[rng.index(26)];
    text[at] = replacement;
  }
  return text;
}

}  // namespace synth
}  // namespace neardup
