#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "neardup/error.hpp"
#include "neardup/message.hpp"
#include "neardup/normalize.hpp"

namespace neardup {

enum class CorpusFormat { jsonl, csv };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  throw error("unknown corpus format: " + std::string(s));
}

// Structural RFC 3339 check: date, 'T' (or ' '), time, optional fraction,
// 'Z' or a numeric offset. Field ranges are validated, leap seconds allowed.
inline bool is_rfc3339(std::string_view s) {
  auto digit = [&](std::size_t i) {
    return i < s.size() && s[i] >= '0' && s[i] <= '9';
  };
  auto num2 = [&](std::size_t i) { return (s[i] - '0') * 10 + (s[i + 1] - '0'); };
  if (s.size() < 20) return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!digit(i)) return false;
  if (s[4] != '-' || s[7] != '-') return false;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return false;
  for (std::size_t i : {11u, 12u, 14u, 15u, 17u, 18u})
    if (!digit(i)) return false;
  if (s[13] != ':' || s[16] != ':') return false;
  const int month = num2(5), day = num2(8);
  const int hour = num2(11), minute = num2(14), second = num2(17);
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  if (hour > 23 || minute > 59 || second > 60) return false;
  std::size_t i = 19;
  if (s[i] == '.') {
    ++i;
    if (!digit(i)) return false;
    while (digit(i)) ++i;
  }
  if (i >= s.size()) return false;
  if (s[i] == 'Z' || s[i] == 'z') return i + 1 == s.size();
  if (s[i] != '+' && s[i] != '-') return false;
  if (i + 6 != s.size()) return false;
  if (!digit(i + 1) || !digit(i + 2) || s[i + 3] != ':' || !digit(i + 4) ||
      !digit(i + 5))
    return false;
  return num2(i + 1) <= 23 && num2(i + 4) <= 59;
}

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  std::vector<RecordError> record_errors;
};

namespace detail {

inline void ingest_record(const nlohmann::json& rec, std::size_t line,
                          IngestResult& out,
                          std::unordered_map<std::string, std::size_t>& seen) {
  auto fail = [&](const std::string& why) {
    out.record_errors.push_back({line, why});
  };
  for (const char* field : {"id", "account_id", "created_at", "text"}) {
    if (!rec.contains(field) || !rec[field].is_string() ||
        rec[field].get<std::string>().empty()) {
      fail(std::string("missing or non-string field '") + field + "'");
      return;
    }
  }
  Message m;
  m.id = rec["id"].get<std::string>();
  m.account_id = rec["account_id"].get<std::string>();
  m.created_at = rec["created_at"].get<std::string>();
  if (!is_rfc3339(m.created_at)) {
    fail("created_at is not RFC 3339: " + m.created_at);
    return;
  }
  m.raw_text = rec["text"].get<std::string>();
  if (rec.contains("lang") && rec["lang"].is_string() &&
      !rec["lang"].get<std::string>().empty()) {
    std::string lang = unicode::lowercase_utf8(rec["lang"].get<std::string>());
    const auto sep = lang.find_first_of("-_");
    if (sep != std::string::npos) lang.resize(sep);  // primary subtag
    m.language = lang;
  }
  if (rec.contains("is_retweet") && rec["is_retweet"].is_boolean())
    m.is_retweet = rec["is_retweet"].get<bool>();
  // Normalized fields may be carried through from a previous run.
  if (rec.contains("semantic_text") && rec["semantic_text"].is_string())
    m.semantic_text = rec["semantic_text"].get<std::string>();
  if (rec.contains("grapheme_text") && rec["grapheme_text"].is_string())
    m.grapheme_text = rec["grapheme_text"].get<std::string>();

  const auto [it, inserted] = seen.emplace(m.id, line);
  if (!inserted) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "duplicate message id '%s' (lines %zu and %zu)",
                  m.id.c_str(), it->second, line);
    throw error(buf);
  }
  out.corpus.messages.push_back(std::move(m));
}

// RFC 4180 CSV row reader working across physical lines (quoted fields
// may embed newlines). Returns false at end of stream.
inline bool read_csv_row(std::istream& in, std::vector<std::string>& fields,
                         std::size_t& line_no) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  while (true) {
    if (c == EOF) {
      fields.push_back(field);
      return true;
    }
    any = true;
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        const int peek = in.peek();
        if (peek == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line_no;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    c = in.get();
  }
  return any;
}

}  // namespace detail

// Reads one message per JSONL line / CSV row. Records failing the schema
// are skipped and reported with their line number; a duplicate id aborts
// the ingest naming both occurrences.
inline IngestResult ingest(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open input file: " + path);

  IngestResult out;
  out.corpus.provenance.source_path = path;
  out.corpus.provenance.format =
      format == CorpusFormat::jsonl ? "jsonl" : "csv";
  std::unordered_map<std::string, std::size_t> seen;

  if (format == CorpusFormat::jsonl) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        out.record_errors.push_back({line_no, "malformed JSON record"});
        continue;
      }
      detail::ingest_record(rec, line_no, out, seen);
    }
  } else {
    std::vector<std::string> header;
    std::size_t line_no = 1;
    if (!detail::read_csv_row(in, header, line_no))
      throw error("CSV file is empty (header required): " + path);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : {"id", "account_id", "created_at", "text"}) {
      if (!col.count(required))
        throw error(std::string("CSV header misses column '") + required +
                    "': " + path);
    }
    std::vector<std::string> row;
    while (true) {
      const std::size_t row_line = line_no;
      if (!detail::read_csv_row(in, row, line_no)) break;
      if (row.size() == 1 && row[0].empty()) continue;
      nlohmann::json rec = nlohmann::json::object();
      for (const auto& [name, idx] : col) {
        if (idx < row.size() && !row[idx].empty()) {
          if (name == "is_retweet")
            rec[name] = (row[idx] == "true" || row[idx] == "1");
          else
            rec[name] = row[idx];
        }
      }
      detail::ingest_record(rec, row_line, out, seen);
    }
  }
  return out;
}

inline nlohmann::json message_to_json(const Message& m) {
  nlohmann::json rec{{"id", m.id},
                     {"account_id", m.account_id},
                     {"created_at", m.created_at},
                     {"lang", m.language},
                     {"text", m.raw_text},
                     {"is_retweet", m.is_retweet}};
  if (!m.semantic_text.empty() || !m.grapheme_text.empty()) {
    rec["semantic_text"] = m.semantic_text;
    rec["grapheme_text"] = m.grapheme_text;
  }
  return rec;
}

inline void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw error("cannot open output file: " + path);
  for (const auto& m : corpus.messages) outf << message_to_json(m) << '\n';
  if (!outf) throw error("write failed: " + path);
}

inline Corpus read_corpus_jsonl(const std::string& path) {
  IngestResult result = ingest(path, CorpusFormat::jsonl);
  if (!result.record_errors.empty()) {
    const auto& first = result.record_errors.front();
    throw error(path + ":" + std::to_string(first.line) + ": " +
                first.message);
  }
  return std::move(result.corpus);
}

// Per-pipeline-stage user and message tallies.
struct StageCounts {
  std::uint64_t users = 0;
  std::uint64_t messages = 0;
};

struct StageReport {
  StageCounts whole;
  StageCounts after_retweet_filter;
  StageCounts after_length_filter;
};

inline StageCounts count_stage(const Corpus& corpus) {
  return {corpus.distinct_accounts(), corpus.messages.size()};
}

inline nlohmann::json stage_report_to_json(const StageReport& report) {
  auto row = [](const StageCounts& c) {
    return nlohmann::json{{"users", c.users}, {"messages", c.messages}};
  };
  return nlohmann::json{{"whole", row(report.whole)},
                        {"after_retweet_filter", row(report.after_retweet_filter)},
                        {"after_length_filter", row(report.after_length_filter)}};
}

}  // namespace neardup
