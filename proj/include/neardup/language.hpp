#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "neardup/corpus_io.hpp"
#include "neardup/error.hpp"
#include "neardup/message.hpp"
#include "neardup/unicode.hpp"

namespace neardup {

inline constexpr std::string_view kUndeterminedLanguage = "und";

struct LanguageTag {
  std::string code;  // lowercase BCP-47 primary subtag or "und"
};

// Binary distance: 0 only when both tags are equal and determined.
// "und" never matches anything, itself included, so untagged pairs can
// never be promoted to Rewording.
inline double dist_language(std::string_view l1, std::string_view l2) {
  if (l1 == kUndeterminedLanguage || l2 == kUndeterminedLanguage) return 1.0;
  return l1 == l2 ? 0.0 : 1.0;
}

inline double dist_language(const LanguageTag& l1, const LanguageTag& l2) {
  return dist_language(l1.code, l2.code);
}

enum class LanguageSource { provided, external_tool };

// External identifier invoked either as a subprocess (JSONL
// {"id","text"} on stdin, {"id","lang"} per line on stdout) or as an
// HTTP endpoint receiving the same records as a JSON array.
struct LangToolConfig {
  std::string command;  // shell command, used when non-empty
  std::string url;      // HTTP endpoint, used when command is empty
  int timeout_seconds = 60;
};

struct LanguageLabelReport {
  std::size_t total = 0;
  std::size_t untagged = 0;  // left as "und"
  std::size_t tool_failures = 0;
  double und_share() const {
    return total == 0 ? 0.0 : static_cast<double>(untagged) / total;
  }
};

namespace detail {

inline std::string normalize_language_code(std::string_view code) {
  std::string lang = unicode::lowercase_utf8(code);
  const auto sep = lang.find_first_of("-_");
  if (sep != std::string::npos) lang.resize(sep);
  if (lang.empty()) lang = kUndeterminedLanguage;
  return lang;
}

inline std::unordered_map<std::string, std::string> run_language_subprocess(
    const Corpus& corpus, const LangToolConfig& config) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const auto dir = fs::temp_directory_path();
  const auto tag =
      std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1));
  const fs::path in_path = dir / ("neardup_lang_in_" + tag + ".jsonl");
  const fs::path out_path = dir / ("neardup_lang_out_" + tag + ".jsonl");
  {
    std::ofstream in_file(in_path);
    for (const auto& m : corpus.messages)
      in_file << nlohmann::json{{"id", m.id}, {"text", m.semantic_text}}
              << '\n';
  }
  const std::string cmd = config.command + " < '" + in_path.string() +
                          "' > '" + out_path.string() + "'";
  const int rc = std::system(cmd.c_str());
  std::unordered_map<std::string, std::string> tags;
  if (rc == 0) {
    std::ifstream out_file(out_path);
    std::string line;
    while (std::getline(out_file, line)) {
      if (line.empty()) continue;
      nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("id") || !rec.contains("lang"))
        continue;
      tags[rec["id"].get<std::string>()] =
          normalize_language_code(rec["lang"].get<std::string>());
    }
  }
  std::error_code ec;
  fs::remove(in_path, ec);
  fs::remove(out_path, ec);
  return tags;
}

inline std::unordered_map<std::string, std::string> run_language_endpoint(
    const Corpus& corpus, const LangToolConfig& config) {
  const auto scheme_end = config.url.find("://");
  if (scheme_end == std::string::npos)
    throw error("language endpoint URL needs a scheme: " + config.url);
  const auto path_start = config.url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos
                               ? config.url
                               : config.url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config.url.substr(path_start);
  httplib::Client client(base);
  client.set_read_timeout(config.timeout_seconds, 0);
  nlohmann::json body = nlohmann::json::array();
  for (const auto& m : corpus.messages)
    body.push_back({{"id", m.id}, {"text", m.semantic_text}});
  std::unordered_map<std::string, std::string> tags;
  auto res = client.Post(path, body.dump(), "application/json");
  if (res && res->status == 200) {
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (!reply.is_discarded() && reply.is_array()) {
      for (const auto& rec : reply) {
        if (rec.contains("id") && rec.contains("lang"))
          tags[rec["id"].get<std::string>()] =
              normalize_language_code(rec["lang"].get<std::string>());
      }
    }
  }
  return tags;
}

}  // namespace detail

// Ensures every message carries a lowercase language tag. `provided`
// keeps the ingested tags; `external_tool` asks the configured
// identifier, falling back to "und" per message on failure.
inline LanguageLabelReport label_languages(
    Corpus& corpus, LanguageSource source,
    const LangToolConfig& config = {}) {
  LanguageLabelReport report;
  report.total = corpus.messages.size();

  std::unordered_map<std::string, std::string> tool_tags;
  if (source == LanguageSource::external_tool) {
    if (config.command.empty() && config.url.empty())
      throw error("external-tool language source needs a command or URL");
    tool_tags = config.command.empty()
                    ? detail::run_language_endpoint(corpus, config)
                    : detail::run_language_subprocess(corpus, config);
  }

  for (auto& m : corpus.messages) {
    if (source == LanguageSource::external_tool) {
      const auto it = tool_tags.find(m.id);
      if (it != tool_tags.end()) {
        m.language = it->second;
      } else {
        m.language = kUndeterminedLanguage;
        ++report.tool_failures;
      }
    } else {
      m.language = detail::normalize_language_code(m.language);
    }
    if (m.language == kUndeterminedLanguage) ++report.untagged;
  }
  return report;
}

}  // namespace neardup
