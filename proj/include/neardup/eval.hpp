#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "neardup/classifier.hpp"
#include "neardup/error.hpp"
#include "neardup/grapheme.hpp"
#include "neardup/message.hpp"
#include "neardup/normalize.hpp"
#include "neardup/rng.hpp"

namespace neardup {

// ---------------------------------------------------------------------------
// Ground truth

enum class TruthLabel { control, copy_pasta, rewording, translation };

inline constexpr TruthLabel kAllTruthLabels[] = {
    TruthLabel::control, TruthLabel::copy_pasta, TruthLabel::rewording,
    TruthLabel::translation};

inline std::string_view to_string(TruthLabel t) {
  switch (t) {
    case TruthLabel::control: return "control";
    case TruthLabel::copy_pasta: return "copy_pasta";
    case TruthLabel::rewording: return "rewording";
    case TruthLabel::translation: return "translation";
  }
  return "?";
}

inline TruthLabel parse_truth_label(std::string_view s) {
  for (auto t : kAllTruthLabels)
    if (to_string(t) == s) return t;
  throw error("unknown ground-truth label: " + std::string(s));
}

// Predicted labels map onto truth classes with NoMatch <-> control.
inline int class_index(TruthLabel t) { return static_cast<int>(t); }
inline int class_index(Label label) {
  switch (label) {
    case Label::no_match: return 0;
    case Label::copy_pasta: return 1;
    case Label::rewording: return 2;
    case Label::translation: return 3;
  }
  return 0;
}

// A ground-truth-labeled message pair. Ids are optional in the fixture
// format; when present they key embeddings for the semantic cascade.
struct LabeledPair {
  Message a;
  Message b;
  TruthLabel truth = TruthLabel::control;
};

struct LabeledPairFile {
  std::vector<LabeledPair> pairs;
  std::size_t skipped_short = 0;
  std::map<std::string, std::size_t> per_class;
};

// Reads {text_a, text_b, lang_a, lang_b, truth[, id_a, id_b]} JSONL and
// runs both texts through the normalization pipeline. The minimum-length
// filter is NOT applied to fixtures unless requested.
inline LabeledPairFile load_labeled_pairs(const std::string& path,
                                          bool apply_length_filter = false,
                                          std::size_t min_letters = 30) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open labeled-pair file: " + path);
  LabeledPairFile out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw error(path + ":" + std::to_string(line_no) + ": malformed record");
    for (const char* field : {"text_a", "text_b", "lang_a", "lang_b", "truth"}) {
      if (!rec.contains(field))
        throw error(path + ":" + std::to_string(line_no) +
                    ": missing field '" + field + "'");
    }
    LabeledPair pair;
    pair.truth = parse_truth_label(rec["truth"].get<std::string>());
    const std::string tag = std::to_string(line_no);
    pair.a.id = rec.value("id_a", "p" + tag + "_a");
    pair.b.id = rec.value("id_b", "p" + tag + "_b");
    pair.a.account_id = "acct_" + pair.a.id;
    pair.b.account_id = "acct_" + pair.b.id;
    pair.a.language = rec["lang_a"].get<std::string>();
    pair.b.language = rec["lang_b"].get<std::string>();
    pair.a.raw_text = rec["text_a"].get<std::string>();
    pair.b.raw_text = rec["text_b"].get<std::string>();
    pair.a = normalize(std::move(pair.a));
    pair.b = normalize(std::move(pair.b));
    if (pair.a.id == pair.b.id)
      throw error(path + ":" + std::to_string(line_no) +
                  ": pair references one id twice");
    if (apply_length_filter && (grapheme_length(pair.a) < min_letters ||
                                grapheme_length(pair.b) < min_letters)) {
      ++out.skipped_short;
      continue;
    }
    ++out.per_class[std::string(to_string(pair.truth))];
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ROC / AUC

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold
  double auc = 0.0;
};

// Distance scores with positive = "distance below threshold". With
// resolution 0 the sweep visits every decision boundary: the smallest
// score (nothing predicted positive), the midpoint between each pair of
// consecutive distinct scores, and just past the largest score
// (everything positive). A nonzero resolution uses a uniform grid
// instead.
inline RocCurve roc(const std::vector<std::pair<double, bool>>& scores,
                    std::size_t resolution = 0) {
  std::size_t positives = 0;
  for (const auto& [score, is_positive] : scores) {
    if (!std::isfinite(score)) throw error("non-finite score in ROC input");
    if (is_positive) ++positives;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0)
    throw error("ROC needs at least one positive and one negative score");

  std::vector<std::pair<double, bool>> sorted = scores;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> values(sorted.size());
  std::vector<std::size_t> pos_prefix(sorted.size() + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    values[i] = sorted[i].first;
    pos_prefix[i + 1] = pos_prefix[i] + (sorted[i].second ? 1 : 0);
  }

  std::vector<double> thresholds;
  if (resolution == 0) {
    thresholds.push_back(values.front());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      if (values[i] != values[i + 1])
        thresholds.push_back(std::midpoint(values[i], values[i + 1]));
    }
    thresholds.push_back(
        std::nextafter(values.back(), std::numeric_limits<double>::infinity()));
  } else {
    if (resolution < 2) throw error("ROC resolution must be 0 or >= 2");
    const double lo = values.front();
    const double hi = std::nextafter(values.back(),
                                     std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < resolution; ++i)
      thresholds.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                    static_cast<double>(resolution - 1));
  }

  RocCurve curve;
  curve.points.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), t) - values.begin());
    const std::size_t tp = pos_prefix[idx];
    const std::size_t fp = idx - tp;
    curve.points.push_back({t,
                            static_cast<double>(tp) / positives,
                            static_cast<double>(fp) / negatives});
  }
  double auc = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& p0 = curve.points[i];
    const auto& p1 = curve.points[i + 1];
    auc += (p1.fpr - p0.fpr) * (p0.tpr + p1.tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

struct YoudenResult {
  double threshold = 0.0;
  double j = 0.0;
};

// Threshold maximizing J = TPR + TNR - 1; ties go to the smaller one.
inline YoudenResult youden_optimal(const RocCurve& curve) {
  if (curve.points.empty()) throw error("youden_optimal on an empty curve");
  YoudenResult best{curve.points.front().threshold,
                    curve.points.front().tpr - curve.points.front().fpr};
  for (const auto& p : curve.points) {
    const double j = p.tpr - p.fpr;
    if (j > best.j) best = {p.threshold, j};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapInterval {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

inline double percentile(std::vector<double>& sorted_values, double p) {
  const double h = p * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = h - std::floor(h);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

}  // namespace detail

// Percentile bootstrap over resampled index sets. Each resample draws
// its RNG stream from (seed, resample index), so results do not depend
// on the worker count.
inline BootstrapInterval bootstrap_ci_indexed(
    std::size_t n_items,
    const std::function<double(std::span<const std::size_t>)>& statistic,
    std::size_t n_resamples = 10000, double level = 0.95,
    std::uint64_t seed = kDefaultSeed, std::size_t workers = 1) {
  if (n_items == 0) throw error("bootstrap needs a non-empty sample");
  if (n_resamples == 0) throw error("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0))
    throw error("bootstrap level must lie in (0,1)");

  std::vector<double> stats(n_resamples);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> indices(n_items);
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = Rng::stream(seed, r);
      for (auto& idx : indices) idx = rng.index(n_items);
      stats[r] = statistic(indices);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n_resamples));
  if (workers == 1) {
    run_range(0, n_resamples);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_resamples + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(begin + chunk, n_resamples);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  return {detail::percentile(stats, alpha), detail::percentile(stats, 1.0 - alpha)};
}

// Percentile bootstrap of a statistic of real-valued samples (mean by
// default, as used for the TPR/FPR error bars).
inline BootstrapInterval bootstrap_ci(
    std::span<const double> samples, std::size_t n_resamples = 10000,
    double level = 0.95, std::uint64_t seed = kDefaultSeed,
    const std::function<double(std::span<const double>)>& statistic = {},
    std::size_t workers = 1) {
  if (samples.empty()) throw error("bootstrap needs a non-empty sample");
  auto stat = statistic;
  if (!stat) {
    stat = [](std::span<const double> v) {
      double sum = 0.0;
      for (double x : v) sum += x;
      return sum / static_cast<double>(v.size());
    };
  }
  // thread_local scratch: resamples materialize values for the statistic
  return bootstrap_ci_indexed(
      samples.size(),
      [&](std::span<const std::size_t> indices) {
        thread_local std::vector<double> scratch;
        scratch.resize(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i)
          scratch[i] = samples[indices[i]];
        return stat(scratch);
      },
      n_resamples, level, seed, workers);
}

// ---------------------------------------------------------------------------
// Confusion matrix

// Rows are truth classes, columns predictions, both in the order
// control, copy_pasta, rewording, translation. "Class accuracy" is the
// row-normalized diagonal (the recall of that class).
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, 4>, 4> counts{};

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (const auto& row : counts)
      for (auto c : row) sum += c;
    return sum;
  }

  std::uint64_t row_total(int cls) const {
    std::uint64_t sum = 0;
    for (auto c : counts[cls]) sum += c;
    return sum;
  }

  std::uint64_t col_total(int cls) const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) sum += row[cls];
    return sum;
  }

  double recall(int cls) const {
    const auto row = row_total(cls);
    return row == 0 ? 0.0 : static_cast<double>(counts[cls][cls]) / row;
  }

  double precision(int cls) const {
    const auto col = col_total(cls);
    return col == 0 ? 0.0 : static_cast<double>(counts[cls][cls]) / col;
  }

  double class_accuracy(int cls) const { return recall(cls); }

  // Micro averages pool all decisions (single-label, so micro precision
  // equals micro recall equals overall accuracy).
  double micro_average() const {
    const auto n = total();
    if (n == 0) return 0.0;
    std::uint64_t diag = 0;
    for (int c = 0; c < 4; ++c) diag += counts[c][c];
    return static_cast<double>(diag) / n;
  }

  double macro_precision() const {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += precision(c);
    return sum / 4.0;
  }

  double macro_recall() const {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += recall(c);
    return sum / 4.0;
  }

  nlohmann::json to_json() const {
    nlohmann::json classes = nlohmann::json::object();
    for (auto t : kAllTruthLabels) {
      const int c = class_index(t);
      classes[std::string(to_string(t))] = {{"precision", precision(c)},
                                            {"recall", recall(c)},
                                            {"accuracy", class_accuracy(c)}};
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : counts) rows.push_back(row);
    return {{"counts", rows},
            {"row_order", {"control", "copy_pasta", "rewording", "translation"}},
            {"per_class", classes},
            {"micro_average", micro_average()},
            {"macro_precision", macro_precision()},
            {"macro_recall", macro_recall()}};
  }
};

inline ConfusionMatrix confusion(const std::vector<Label>& predictions,
                                 const std::vector<TruthLabel>& truths) {
  if (predictions.size() != truths.size())
    throw error("confusion: prediction/truth size mismatch");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    ++m.counts[class_index(truths[i])][class_index(predictions[i])];
  return m;
}

// Matches verdicts to labeled pairs by PairKey; every verdict must have
// a ground truth.
inline ConfusionMatrix confusion(const std::vector<PairVerdict>& verdicts,
                                 const std::vector<LabeledPair>& truth) {
  std::map<PairKey, TruthLabel> by_pair;
  for (const auto& p : truth)
    by_pair.emplace(make_pair_key(p.a.id, p.b.id), p.truth);
  ConfusionMatrix m;
  for (const auto& v : verdicts) {
    const auto it = by_pair.find(v.pair);
    if (it == by_pair.end())
      throw error("verdict pair (" + v.pair.first_id + ", " +
                  v.pair.second_id + ") has no ground truth");
    ++m.counts[class_index(it->second)][class_index(v.label)];
  }
  return m;
}

// Classifies each labeled pair through the cascade. The store supplies
// embeddings keyed by the pair ids.
inline std::vector<PairVerdict> classify_labeled(
    const std::vector<LabeledPair>& pairs, const EmbeddingStore& store,
    const Thresholds& t, CascadeOrder order = CascadeOrder::grapheme_first) {
  std::vector<PairVerdict> verdicts;
  verdicts.reserve(pairs.size());
  for (const auto& p : pairs)
    verdicts.push_back(
        classify_pair(p.a, store.at(p.a.id), p.b, store.at(p.b.id), t, order));
  return verdicts;
}

// ---------------------------------------------------------------------------
// Wall-time benchmark

struct BenchEntry {
  std::uint64_t pairs = 0;
  double wall_seconds = 0.0;
  double mean_seconds_per_pair = 0.0;
  double mean_distance = 0.0;  // doubles as an optimization barrier
};

struct BenchReport {
  std::vector<std::pair<GraphemeAlgorithm, BenchEntry>> entries;
};

// Times every cross-account pair on a single worker, per algorithm.
// Per-message preparation (decoding, single-string compression sizes,
// bigram tallies) is part of the measured time.
inline BenchReport bench_grapheme(const Corpus& corpus,
                                  const std::vector<GraphemeAlgorithm>& algos) {
  if (corpus.messages.size() < 2)
    throw error("benchmark needs at least 2 messages");
  BenchReport report;
  for (auto algo : algos) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<PreparedMessage> prepared;
    prepared.reserve(corpus.messages.size());
    for (const auto& m : corpus.messages)
      prepared.push_back(prepare_message(m, algo));
    double sum = 0.0;
    std::uint64_t pairs = 0;
    PairStream stream(corpus);
    while (auto next = stream.next()) {
      const auto [i, j] = *next;
      sum += grapheme_distance(prepared[i], prepared[j], algo);
      ++pairs;
    }
    const auto stop = std::chrono::steady_clock::now();
    BenchEntry entry;
    entry.pairs = pairs;
    entry.wall_seconds = std::chrono::duration<double>(stop - start).count();
    entry.mean_seconds_per_pair =
        pairs == 0 ? 0.0 : entry.wall_seconds / static_cast<double>(pairs);
    entry.mean_distance = pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
    report.entries.emplace_back(algo, entry);
  }
  return report;
}

inline nlohmann::json bench_report_to_json(const BenchReport& report) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [algo, entry] : report.entries) {
    out[std::string(to_string(algo))] = {
        {"pairs", entry.pairs},
        {"wall_seconds", entry.wall_seconds},
        {"mean_seconds_per_pair", entry.mean_seconds_per_pair},
        {"mean_distance", entry.mean_distance}};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-algorithm Copy-Pasta vs Rewording evaluation

struct GraphemeEvalReport {
  GraphemeAlgorithm algorithm = GraphemeAlgorithm::lv;
  RocCurve curve;
  double auc = 0.0;
  BootstrapInterval auc_ci;
  double optimal_threshold = 0.0;
  double j = 0.0;
  BootstrapInterval j_ci;
  double precision = 0.0;  // at the optimal threshold
  double recall = 0.0;
};

// Scores every copy_pasta/rewording pair with one grapheme algorithm
// (positive = copy_pasta, predicted positive = distance below
// threshold) and summarizes ROC, AUC, the Youden-optimal threshold and
// bootstrap CIs over resampled pairs.
inline GraphemeEvalReport evaluate_grapheme_algorithm(
    const std::vector<LabeledPair>& pairs, GraphemeAlgorithm algo,
    std::size_t n_resamples = 1000, std::uint64_t seed = kDefaultSeed,
    std::size_t workers = 1) {
  std::vector<std::pair<double, bool>> scores;
  for (const auto& p : pairs) {
    if (p.truth != TruthLabel::copy_pasta && p.truth != TruthLabel::rewording)
      continue;
    const double d = grapheme_distance_tagged(p.a, p.b, algo).value;
    scores.emplace_back(d, p.truth == TruthLabel::copy_pasta);
  }
  if (scores.empty())
    throw error("no copy_pasta/rewording pairs to evaluate");

  GraphemeEvalReport report;
  report.algorithm = algo;
  report.curve = roc(scores);
  report.auc = report.curve.auc;
  const auto best = youden_optimal(report.curve);
  report.optimal_threshold = best.threshold;
  report.j = best.j;

  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& [score, is_positive] : scores) {
    const bool predicted = score < best.threshold;
    if (predicted && is_positive) ++tp;
    if (predicted && !is_positive) ++fp;
    if (!predicted && is_positive) ++fn;
  }
  report.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  report.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);

  auto resampled_curve = [&](std::span<const std::size_t> indices,
                             auto&& summary) {
    thread_local std::vector<std::pair<double, bool>> resample;
    resample.clear();
    bool has_pos = false, has_neg = false;
    for (std::size_t idx : indices) {
      resample.push_back(scores[idx]);
      (scores[idx].second ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) return -1.0;  // degenerate draw, see below
    return summary(roc(resample));
  };
  // Degenerate single-class resamples are vanishingly rare for the
  // fixture sizes in play; scoring them as -1 keeps them at the extreme
  // low percentile instead of aborting the run.
  report.auc_ci = bootstrap_ci_indexed(
      scores.size(),
      [&](std::span<const std::size_t> idx) {
        return resampled_curve(idx, [](const RocCurve& c) { return c.auc; });
      },
      n_resamples, 0.95, seed, workers);
  report.j_ci = bootstrap_ci_indexed(
      scores.size(),
      [&](std::span<const std::size_t> idx) {
        return resampled_curve(
            idx, [](const RocCurve& c) { return youden_optimal(c).j; });
      },
      n_resamples, 0.95, seed ^ 0x5DEECE66DULL, workers);
  return report;
}

inline nlohmann::json grapheme_eval_to_json(const GraphemeEvalReport& r,
                                            bool include_curve = true) {
  nlohmann::json out{
      {"algorithm", std::string(to_string(r.algorithm))},
      {"auc", r.auc},
      {"auc_ci", {r.auc_ci.lo, r.auc_ci.hi}},
      {"optimal_threshold", r.optimal_threshold},
      {"youden_j", r.j},
      {"youden_j_ci", {r.j_ci.lo, r.j_ci.hi}},
      {"precision", r.precision},
      {"recall", r.recall}};
  if (include_curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.curve.points)
      points.push_back({{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}});
    out["roc"] = points;
  }
  return out;
}

}  // namespace neardup
