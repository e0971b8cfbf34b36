#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "neardup/classifier.hpp"
#include "neardup/error.hpp"
#include "neardup/message.hpp"
#include "neardup/unicode.hpp"

namespace neardup {

// Message-level duplication graph: only matched pairs become edges.
struct DuplicationGraph {
  struct Edge {
    PairKey pair;
    Label label = Label::copy_pasta;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  std::vector<std::string> nodes;  // sorted unique ids
  std::vector<Edge> edges;         // sorted by pair

  friend bool operator==(const DuplicationGraph&,
                         const DuplicationGraph&) = default;
};

// Account-level projection: edge weight counts shared duplicate pairs.
struct AccountGraph {
  struct Edge {
    PairKey pair;
    std::uint64_t weight = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  std::vector<std::string> nodes;
  std::vector<Edge> edges;

  friend bool operator==(const AccountGraph&, const AccountGraph&) = default;
};

inline DuplicationGraph build_message_graph(
    const std::vector<PairVerdict>& verdicts) {
  DuplicationGraph g;
  std::set<std::string> nodes;
  for (const auto& v : verdicts) {
    if (v.label == Label::no_match) continue;
    nodes.insert(v.pair.first_id);
    nodes.insert(v.pair.second_id);
    g.edges.push_back({v.pair, v.label});
  }
  g.nodes.assign(nodes.begin(), nodes.end());
  std::sort(g.edges.begin(), g.edges.end(),
            [](const auto& a, const auto& b) { return a.pair < b.pair; });
  return g;
}

// Undirected connected components over the edges passing the label
// filter (empty filter = all edges). Nodes left without any passing
// edge are dropped. Components come sorted by size descending, ties by
// smallest contained id; members sorted ascending.
inline std::vector<std::vector<std::string>> connected_components(
    const DuplicationGraph& g, const std::set<Label>& edge_filter = {}) {
  std::unordered_map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find =
      [&](const std::string& x) -> std::string {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    const std::string root = find(it->second);
    parent[x] = root;
    return root;
  };
  auto unite = [&](const std::string& a, const std::string& b) {
    const std::string ra = find(a), rb = find(b);
    parent.try_emplace(a, a);
    parent.try_emplace(b, b);
    if (ra != rb) parent[ra <= rb ? rb : ra] = ra <= rb ? ra : rb;
  };
  for (const auto& e : g.edges) {
    if (!edge_filter.empty() && !edge_filter.count(e.label)) continue;
    unite(e.pair.first_id, e.pair.second_id);
  }
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [node, _] : parent) groups[find(node)].push_back(node);
  std::vector<std::vector<std::string>> components;
  components.reserve(groups.size());
  for (auto& [_, members] : groups) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) {
              if (a.size() != b.size()) return a.size() > b.size();
              return a.front() < b.front();
            });
  return components;
}

// One account edge increment per message edge; endpoints are guaranteed
// cross-account by pair generation.
inline AccountGraph project_accounts(const DuplicationGraph& g,
                                     const Corpus& corpus) {
  const auto index = corpus.id_index();
  auto account_of = [&](const std::string& id) -> const std::string& {
    const auto it = index.find(id);
    if (it == index.end()) throw error("graph node has no corpus message: " + id);
    return corpus.messages[it->second].account_id;
  };
  std::map<PairKey, std::uint64_t> weights;
  std::set<std::string> nodes;
  for (const auto& e : g.edges) {
    const std::string& a = account_of(e.pair.first_id);
    const std::string& b = account_of(e.pair.second_id);
    nodes.insert(a);
    nodes.insert(b);
    ++weights[make_pair_key(a, b)];
  }
  AccountGraph out;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.edges.reserve(weights.size());
  for (const auto& [pair, w] : weights) out.edges.push_back({pair, w});
  return out;
}

// Alternative linkage: accounts are connected when they own messages in
// the same duplicate component, even without a direct shared pair.
// Weight counts shared components.
inline AccountGraph project_accounts_by_component(const DuplicationGraph& g,
                                                  const Corpus& corpus) {
  const auto index = corpus.id_index();
  std::map<PairKey, std::uint64_t> weights;
  std::set<std::string> nodes;
  for (const auto& component : connected_components(g)) {
    std::set<std::string> accounts;
    for (const auto& id : component) {
      const auto it = index.find(id);
      if (it == index.end())
        throw error("graph node has no corpus message: " + id);
      accounts.insert(corpus.messages[it->second].account_id);
    }
    nodes.insert(accounts.begin(), accounts.end());
    for (auto a = accounts.begin(); a != accounts.end(); ++a) {
      for (auto b = std::next(a); b != accounts.end(); ++b)
        ++weights[make_pair_key(*a, *b)];
    }
  }
  AccountGraph out;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.edges.reserve(weights.size());
  for (const auto& [pair, w] : weights) out.edges.push_back({pair, w});
  return out;
}

// Per-account share of each duplication method among the duplicate
// pairs the account participates in.
struct MethodMix {
  std::string account_id;
  double copy_pasta = 0.0;
  double rewording = 0.0;
  double translation = 0.0;
  std::uint64_t total = 0;
};

inline std::vector<MethodMix> method_mix(const std::vector<PairVerdict>& verdicts,
                                         const Corpus& corpus) {
  const auto index = corpus.id_index();
  struct Tally {
    std::uint64_t counts[3] = {0, 0, 0};
  };
  std::map<std::string, Tally> tallies;
  for (const auto& v : verdicts) {
    if (v.label == Label::no_match) continue;
    for (const std::string* id : {&v.pair.first_id, &v.pair.second_id}) {
      const auto it = index.find(*id);
      if (it == index.end())
        throw error("verdict references unknown message id: " + *id);
      ++tallies[corpus.messages[it->second].account_id]
            .counts[static_cast<int>(v.label)];
    }
  }
  std::vector<MethodMix> out;
  out.reserve(tallies.size());
  for (const auto& [account, tally] : tallies) {
    MethodMix mix;
    mix.account_id = account;
    mix.total = tally.counts[0] + tally.counts[1] + tally.counts[2];
    if (mix.total == 0) continue;
    mix.copy_pasta = static_cast<double>(tally.counts[0]) / mix.total;
    mix.rewording = static_cast<double>(tally.counts[1]) / mix.total;
    mix.translation = static_cast<double>(tally.counts[2]) / mix.total;
    out.push_back(std::move(mix));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theme labeling

inline constexpr std::string_view kUnlabeledTheme = "unlabeled";

// Ordered theme -> keyword lists. First theme whose keyword occurs
// (case-insensitively) in a message's semantic_text wins.
struct ThemeMap {
  std::vector<std::pair<std::string, std::vector<std::string>>> themes;

  void validate() const {
    std::set<std::string> seen;
    for (const auto& [name, keywords] : themes) {
      if (name == kUnlabeledTheme)
        throw error("theme name 'unlabeled' is reserved");
      if (keywords.empty())
        throw error("theme '" + name + "' has an empty keyword list");
      for (const auto& kw : keywords) {
        const std::string folded = unicode::lowercase_utf8(kw);
        if (!seen.insert(folded).second)
          throw error("keyword '" + kw + "' appears in more than one theme");
      }
    }
  }

  static ThemeMap defaults() {
    ThemeMap map;
    map.themes = {
        {"politics",
         {"#AlexSaab", "Alex Saab", "#YoConDavid", "#KuriGanador",
          "#KuriGobernador", "#RenunciaClaraLuz", "#GobernadoraNoSeras",
          "#VamosBorrego", "#BrozoConSamuel", "#SamuelConBrozo",
          "#VoyConChristian"}},
        {"entertainment", {"#TWDxSTARChannel", "#LordVideoCentro"}},
        {"alcohol", {"#SoyPuraPiraña", "#INDIOsustentable"}},
    };
    return map;
  }

  static ThemeMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open theme config: " + path);
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw error("bad theme config " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw error("theme config must be a JSON object");
    ThemeMap map;
    for (const auto& [name, keywords] : doc.items()) {
      if (!keywords.is_array())
        throw error("theme '" + name + "' must map to a keyword array");
      std::vector<std::string> list;
      for (const auto& kw : keywords) list.push_back(kw.get<std::string>());
      map.themes.emplace_back(name, std::move(list));
    }
    map.validate();
    return map;
  }
};

struct ThemeAssignment {
  std::unordered_map<std::string, std::string> theme_by_id;
  double labeled_share = 0.0;
};

inline ThemeAssignment label_themes(const Corpus& corpus, const ThemeMap& map) {
  map.validate();
  std::vector<std::pair<std::string, std::vector<std::string>>> folded;
  folded.reserve(map.themes.size());
  for (const auto& [name, keywords] : map.themes) {
    std::vector<std::string> lowered;
    lowered.reserve(keywords.size());
    for (const auto& kw : keywords) lowered.push_back(unicode::lowercase_utf8(kw));
    folded.emplace_back(name, std::move(lowered));
  }
  ThemeAssignment out;
  std::size_t labeled = 0;
  for (const auto& m : corpus.messages) {
    const std::string haystack = unicode::lowercase_utf8(m.semantic_text);
    std::string theme(kUnlabeledTheme);
    for (const auto& [name, keywords] : folded) {
      const bool hit = std::any_of(
          keywords.begin(), keywords.end(), [&](const std::string& kw) {
            return haystack.find(kw) != std::string::npos;
          });
      if (hit) {
        theme = name;
        break;
      }
    }
    if (theme != kUnlabeledTheme) ++labeled;
    out.theme_by_id.emplace(m.id, std::move(theme));
  }
  out.labeled_share = corpus.messages.empty()
                          ? 0.0
                          : static_cast<double>(labeled) / corpus.messages.size();
  return out;
}

// ---------------------------------------------------------------------------
// Reports

// Hashtag tokens of a semantic_text: '#' followed by letters, digits or
// underscores. Returned lowercased.
inline std::vector<std::string> extract_hashtags(std::string_view semantic) {
  std::vector<std::string> tags;
  const std::u32string cps = unicode::decode_utf8(semantic);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (cps[i] == U'#') {
      std::size_t j = i + 1;
      std::u32string tag;
      while (j < cps.size() &&
             (unicode::is_alnum(cps[j]) || cps[j] == U'_')) {
        tag.push_back(unicode::to_lower(cps[j]));
        ++j;
      }
      if (!tag.empty()) {
        std::string encoded = "#";
        encoded += unicode::encode_utf8(tag);
        tags.push_back(std::move(encoded));
      }
      i = j;
    } else {
      ++i;
    }
  }
  return tags;
}

namespace detail {

inline std::vector<std::string> top_counted(
    const std::map<std::string, std::uint64_t>& counts, std::size_t top_n) {
  std::vector<std::pair<std::string, std::uint64_t>> items(counts.begin(),
                                                           counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size() && i < top_n; ++i)
    out.push_back(items[i].first);
  return out;
}

}  // namespace detail

// Per-component annotations: size, per-label edge histogram, and the
// three most represented hashtags and languages of member messages.
inline nlohmann::json component_report(const DuplicationGraph& g,
                                       const Corpus& corpus,
                                       std::size_t top_n = 3) {
  const auto index = corpus.id_index();
  const auto components = connected_components(g);
  std::unordered_map<std::string, std::size_t> component_of;
  for (std::size_t c = 0; c < components.size(); ++c)
    for (const auto& id : components[c]) component_of[id] = c;

  std::vector<std::map<std::string, std::uint64_t>> label_hist(
      components.size());
  for (const auto& e : g.edges) {
    const auto it = component_of.find(e.pair.first_id);
    if (it != component_of.end())
      ++label_hist[it->second][std::string(to_string(e.label))];
  }

  nlohmann::json report = nlohmann::json::array();
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::map<std::string, std::uint64_t> hashtags, languages;
    for (const auto& id : components[c]) {
      const auto it = index.find(id);
      if (it == index.end()) continue;
      const Message& m = corpus.messages[it->second];
      for (auto& tag : extract_hashtags(m.semantic_text)) ++hashtags[tag];
      ++languages[m.language];
    }
    report.push_back(
        {{"size", components[c].size()},
         {"label_histogram", label_hist[c]},
         {"top_hashtags", detail::top_counted(hashtags, top_n)},
         {"top_languages", detail::top_counted(languages, top_n)}});
  }
  return report;
}

// Theme x method counts per account cluster (one sunburst per cluster).
// Every message edge contributes each of its endpoints once, under that
// endpoint's theme.
inline nlohmann::json theme_method_breakdown(const DuplicationGraph& g,
                                             const Corpus& corpus,
                                             const ThemeAssignment& themes,
                                             const AccountGraph& accounts) {
  const auto index = corpus.id_index();
  std::unordered_map<std::string, std::size_t> cluster_of;
  std::vector<std::vector<std::string>> clusters;
  {
    DuplicationGraph account_view;
    account_view.nodes = accounts.nodes;
    for (const auto& e : accounts.edges)
      account_view.edges.push_back({e.pair, Label::copy_pasta});
    clusters = connected_components(account_view);
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (const auto& id : clusters[c]) cluster_of[id] = c;
  }
  std::vector<std::map<std::string, std::map<std::string, std::uint64_t>>>
      counts(clusters.size());
  for (const auto& e : g.edges) {
    for (const std::string* id : {&e.pair.first_id, &e.pair.second_id}) {
      const auto mi = index.find(*id);
      if (mi == index.end()) continue;
      const auto ci = cluster_of.find(corpus.messages[mi->second].account_id);
      if (ci == cluster_of.end()) continue;
      const auto ti = themes.theme_by_id.find(*id);
      const std::string theme = ti == themes.theme_by_id.end()
                                    ? std::string(kUnlabeledTheme)
                                    : ti->second;
      ++counts[ci->second][theme][std::string(to_string(e.label))];
    }
  }
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t c = 0; c < clusters.size(); ++c)
    out.push_back({{"accounts", clusters[c]}, {"themes", counts[c]}});
  return out;
}

}  // namespace neardup
