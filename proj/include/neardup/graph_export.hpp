#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "neardup/error.hpp"
#include "neardup/graph.hpp"

namespace neardup {

// Serialization-neutral view of either graph flavor: string-valued node
// and edge attributes, stable ordering throughout, so every export is
// byte-reproducible.
struct PlainGraph {
  std::string kind;  // "messages" or "accounts"
  struct Node {
    std::string id;
    std::map<std::string, std::string> attrs;
    friend bool operator==(const Node&, const Node&) = default;
  };
  struct Edge {
    std::string a, b;
    std::map<std::string, std::string> attrs;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  friend bool operator==(const PlainGraph&, const PlainGraph&) = default;
};

// Optional per-message annotations attached to exported nodes.
struct NodeAnnotations {
  const Corpus* corpus = nullptr;            // adds account + lang
  const ThemeAssignment* themes = nullptr;   // adds theme
};

inline PlainGraph to_plain(const DuplicationGraph& g,
                           const NodeAnnotations& notes = {}) {
  PlainGraph out;
  out.kind = "messages";
  std::unordered_map<std::string, const Message*> by_id;
  if (notes.corpus) {
    for (const auto& m : notes.corpus->messages) by_id.emplace(m.id, &m);
  }
  for (const auto& id : g.nodes) {
    PlainGraph::Node node{id, {}};
    if (const auto it = by_id.find(id); it != by_id.end()) {
      node.attrs["account"] = it->second->account_id;
      node.attrs["lang"] = it->second->language;
    }
    if (notes.themes) {
      const auto it = notes.themes->theme_by_id.find(id);
      if (it != notes.themes->theme_by_id.end())
        node.attrs["theme"] = it->second;
    }
    out.nodes.push_back(std::move(node));
  }
  for (const auto& e : g.edges)
    out.edges.push_back({e.pair.first_id,
                         e.pair.second_id,
                         {{"label", std::string(to_string(e.label))}}});
  return out;
}

inline PlainGraph to_plain(const AccountGraph& g) {
  PlainGraph out;
  out.kind = "accounts";
  for (const auto& id : g.nodes) out.nodes.push_back({id, {}});
  for (const auto& e : g.edges)
    out.edges.push_back({e.pair.first_id,
                         e.pair.second_id,
                         {{"weight", std::to_string(e.weight)}}});
  return out;
}

inline DuplicationGraph message_graph_from_plain(const PlainGraph& plain) {
  if (plain.kind != "messages")
    throw error("expected a message graph, got kind '" + plain.kind + "'");
  DuplicationGraph g;
  for (const auto& n : plain.nodes) g.nodes.push_back(n.id);
  for (const auto& e : plain.edges) {
    const auto it = e.attrs.find("label");
    if (it == e.attrs.end()) throw error("message edge without label");
    g.edges.push_back({make_pair_key(e.a, e.b), parse_label(it->second)});
  }
  return g;
}

inline AccountGraph account_graph_from_plain(const PlainGraph& plain) {
  if (plain.kind != "accounts")
    throw error("expected an account graph, got kind '" + plain.kind + "'");
  AccountGraph g;
  for (const auto& n : plain.nodes) g.nodes.push_back(n.id);
  for (const auto& e : plain.edges) {
    const auto it = e.attrs.find("weight");
    if (it == e.attrs.end()) throw error("account edge without weight");
    g.edges.push_back(
        {make_pair_key(e.a, e.b),
         static_cast<std::uint64_t>(std::stoull(it->second))});
  }
  return g;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string dot_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline void export_graphml(const PlainGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open output file: " + path);
  std::set<std::string> node_keys, edge_keys;
  for (const auto& n : g.nodes)
    for (const auto& [k, _] : n.attrs) node_keys.insert(k);
  for (const auto& e : g.edges)
    for (const auto& [k, _] : e.attrs) edge_keys.insert(k);

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  for (const auto& k : node_keys)
    out << "  <key id=\"n_" << detail::xml_escape(k)
        << "\" for=\"node\" attr.name=\"" << detail::xml_escape(k)
        << "\" attr.type=\"string\"/>\n";
  for (const auto& k : edge_keys)
    out << "  <key id=\"e_" << detail::xml_escape(k)
        << "\" for=\"edge\" attr.name=\"" << detail::xml_escape(k)
        << "\" attr.type=\"string\"/>\n";
  out << "  <graph id=\"" << detail::xml_escape(g.kind)
      << "\" edgedefault=\"undirected\">\n";
  for (const auto& n : g.nodes) {
    out << "    <node id=\"" << detail::xml_escape(n.id) << "\"";
    if (n.attrs.empty()) {
      out << "/>\n";
    } else {
      out << ">\n";
      for (const auto& [k, v] : n.attrs)
        out << "      <data key=\"n_" << detail::xml_escape(k) << "\">"
            << detail::xml_escape(v) << "</data>\n";
      out << "    </node>\n";
    }
  }
  for (const auto& e : g.edges) {
    out << "    <edge source=\"" << detail::xml_escape(e.a) << "\" target=\""
        << detail::xml_escape(e.b) << "\">\n";
    for (const auto& [k, v] : e.attrs)
      out << "      <data key=\"e_" << detail::xml_escape(k) << "\">"
          << detail::xml_escape(v) << "</data>\n";
    out << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  if (!out) throw error("write failed: " + path);
}

inline void export_dot(const PlainGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open output file: " + path);
  out << "graph " << g.kind << " {\n";
  for (const auto& n : g.nodes) {
    out << "  \"" << detail::dot_escape(n.id) << "\"";
    if (!n.attrs.empty()) {
      out << " [";
      bool first = true;
      for (const auto& [k, v] : n.attrs) {
        if (!first) out << ", ";
        first = false;
        out << k << "=\"" << detail::dot_escape(v) << "\"";
      }
      out << "]";
    }
    out << ";\n";
  }
  for (const auto& e : g.edges) {
    out << "  \"" << detail::dot_escape(e.a) << "\" -- \""
        << detail::dot_escape(e.b) << "\"";
    if (!e.attrs.empty()) {
      out << " [";
      bool first = true;
      for (const auto& [k, v] : e.attrs) {
        if (!first) out << ", ";
        first = false;
        out << (k == "weight" ? "label" : k) << "=\"" << detail::dot_escape(v)
            << "\"";
        if (k == "weight") out << ", weight=" << v;
      }
      out << "]";
    }
    out << ";\n";
  }
  out << "}\n";
  if (!out) throw error("write failed: " + path);
}

inline void export_jsonl(const PlainGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open output file: " + path);
  out << nlohmann::json{{"type", "graph"}, {"kind", g.kind}} << '\n';
  for (const auto& n : g.nodes) {
    nlohmann::json rec{{"type", "node"}, {"id", n.id}};
    for (const auto& [k, v] : n.attrs) rec[k] = v;
    out << rec << '\n';
  }
  for (const auto& e : g.edges) {
    nlohmann::json rec{{"type", "edge"}, {"a", e.a}, {"b", e.b}};
    for (const auto& [k, v] : e.attrs) rec[k] = v;
    out << rec << '\n';
  }
  if (!out) throw error("write failed: " + path);
}

inline PlainGraph import_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open graph file: " + path);
  PlainGraph g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("type"))
      throw error(path + ":" + std::to_string(line_no) +
                  ": malformed graph record");
    const std::string type = rec["type"].get<std::string>();
    if (type == "graph") {
      g.kind = rec.value("kind", "messages");
    } else if (type == "node") {
      PlainGraph::Node n{rec.at("id").get<std::string>(), {}};
      for (const auto& [k, v] : rec.items())
        if (k != "type" && k != "id") n.attrs[k] = v.get<std::string>();
      g.nodes.push_back(std::move(n));
    } else if (type == "edge") {
      PlainGraph::Edge e{rec.at("a").get<std::string>(),
                         rec.at("b").get<std::string>(),
                         {}};
      for (const auto& [k, v] : rec.items())
        if (k != "type" && k != "a" && k != "b")
          e.attrs[k] = v.get<std::string>();
      g.edges.push_back(std::move(e));
    } else {
      throw error(path + ":" + std::to_string(line_no) +
                  ": unknown record type '" + type + "'");
    }
  }
  return g;
}

}  // namespace neardup
