#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "neardup/error.hpp"
#include "neardup/semantic.hpp"

namespace neardup {

// HTTP embedding provider settings. The bearer token is read from the
// environment so it never lands in config files or run echoes.
struct EmbedServiceConfig {
  std::string url;    // e.g. http://127.0.0.1:8080/v1/embeddings
  std::string model;  // provider-side model name
  std::string token_env = "NEARDUP_EMBED_TOKEN";
  std::size_t batch_size = 64;
  int max_retries = 4;
  int backoff_initial_ms = 250;
  std::size_t concurrency = 1;
  std::string cache_path;  // optional on-disk store reused across runs
  int timeout_seconds = 60;
};

namespace detail {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /rest, at least "/"
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw error("embedding endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace detail

// Fetches one embedding per (id, text) via the HTTP provider. Requests
// are batched; 429/5xx/transport failures retry with exponential
// backoff. Results already present in the cache file are not refetched,
// and the merged store is written back to the cache only after every
// batch succeeded, so a failed run never commits a partial store.
// On a non-retryable failure the error lists every still-unembedded id.
inline EmbeddingStore fetch_embeddings(
    const std::vector<std::pair<std::string, std::string>>& id_texts,
    const EmbedServiceConfig& config) {
  if (config.url.empty()) throw error("embedding endpoint URL not configured");
  if (config.batch_size == 0) throw error("batch size must be positive");

  EmbeddingStore store("http:" + config.model);
  if (!config.cache_path.empty() &&
      std::filesystem::exists(config.cache_path)) {
    store = EmbeddingStore::load(config.cache_path);
    store.set_provider("http:" + config.model);
  }

  std::vector<std::size_t> pending;  // indexes into id_texts
  for (std::size_t i = 0; i < id_texts.size(); ++i)
    if (!store.contains(id_texts[i].first)) pending.push_back(i);

  const auto [base, path] = detail::split_url(config.url);
  const char* token = std::getenv(config.token_env.c_str());

  struct Batch {
    std::size_t begin = 0, end = 0;  // range into `pending`
    std::vector<EmbeddingVector> vectors;
  };
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < pending.size();
       begin += config.batch_size)
    batches.push_back(
        {begin, std::min(begin + config.batch_size, pending.size()), {}});

  std::atomic<std::size_t> next_batch{0};
  std::mutex failure_mutex;
  std::string failure;

  auto run_batch = [&](Batch& batch) {
    httplib::Client client(base);
    client.set_connection_timeout(config.timeout_seconds, 0);
    client.set_read_timeout(config.timeout_seconds, 0);
    if (token) client.set_bearer_token_auth(token);

    nlohmann::json body{{"model", config.model},
                        {"input", nlohmann::json::array()}};
    for (std::size_t k = batch.begin; k < batch.end; ++k)
      body["input"].push_back(id_texts[pending[k]].second);
    const std::string payload = body.dump();

    int delay_ms = config.backoff_initial_ms;
    for (int attempt = 0;; ++attempt) {
      auto res = client.Post(path, payload, "application/json");
      const bool transport_failure = !res;
      if (!transport_failure && res->status == 200) {
        nlohmann::json reply =
            nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("data") ||
            !reply["data"].is_array() ||
            reply["data"].size() != batch.end - batch.begin)
          throw error("embedding service returned a malformed reply");
        for (const auto& item : reply["data"]) {
          if (!item.contains("embedding") || !item["embedding"].is_array())
            throw error("embedding service reply misses 'embedding'");
          EmbeddingVector vec;
          vec.reserve(item["embedding"].size());
          for (const auto& v : item["embedding"]) vec.push_back(v.get<float>());
          batch.vectors.push_back(std::move(vec));
        }
        return;
      }
      const bool retryable =
          transport_failure || detail::retryable_status(res->status);
      if (!retryable || attempt >= config.max_retries) {
        std::string why = transport_failure
                              ? "transport failure"
                              : "HTTP " + std::to_string(res->status);
        throw error("embedding service error (" + why + ") after " +
                    std::to_string(attempt + 1) + " attempt(s)");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms *= 2;
    }
  };

  auto worker = [&] {
    while (true) {
      const std::size_t b = next_batch.fetch_add(1);
      if (b >= batches.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure.empty()) return;  // another batch already failed
      }
      try {
        run_batch(batches[b]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure.empty()) failure = e.what();
        return;
      }
    }
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min(config.concurrency, batches.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!failure.empty()) {
    std::string ids;
    std::size_t count = 0;
    for (const auto& batch : batches) {
      if (!batch.vectors.empty()) continue;  // this batch had succeeded
      for (std::size_t k = batch.begin; k < batch.end; ++k) {
        if (!ids.empty()) ids += ", ";
        ids += id_texts[pending[k]].first;
        ++count;
      }
    }
    throw error(failure + "; " + std::to_string(count) +
                " message(s) left unembedded: " + ids);
  }

  for (const auto& batch : batches)
    for (std::size_t k = batch.begin; k < batch.end; ++k)
      store.insert(id_texts[pending[k]].first,
                   batch.vectors[k - batch.begin]);

  if (!config.cache_path.empty() && !batches.empty())
    store.save_jsonl(config.cache_path);
  return store;
}

}  // namespace neardup
