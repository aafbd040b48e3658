#include "cogeffort/evalcore.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "cogeffort/error.hpp"
#include "cogeffort/stats.hpp"

namespace cogeffort {

ConfusionCounts confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.empty()) throw DataError("classification metrics: empty input");
  if (y_true.size() != y_pred.size()) throw ShapeError("classification metrics: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw DataError("classification metrics: labels must be 0 or 1");
    }
    if (t == 1) {
      ++(p == 1 ? c.tp : c.fn);
    } else {
      ++(p == 1 ? c.fp : c.tn);
    }
  }
  return c;
}

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred) {
  ClassificationMetrics m;
  m.counts = confusion(y_true, y_pred);
  const auto& c = m.counts;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1_undefined = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

nlohmann::json ClassificationMetrics::to_json() const {
  return {{"accuracy", accuracy},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"tp", counts.tp},
          {"fp", counts.fp},
          {"tn", counts.tn},
          {"fn", counts.fn},
          {"precision_undefined", precision_undefined},
          {"recall_undefined", recall_undefined},
          {"f1_undefined", f1_undefined}};
}

std::string to_string(EffortMode m) {
  return m == EffortMode::literal ? "literal" : "conventional";
}

EffortMode parse_effort_mode(const std::string& s) {
  if (s == "literal") return EffortMode::literal;
  if (s == "conventional") return EffortMode::conventional;
  throw ConfigError("unknown effort mode '" + s + "' (literal|conventional)");
}

std::string to_string(EffortSource s) {
  return s == EffortSource::actual ? "actual" : "predicted";
}

std::vector<double> zscore_performance(std::span<const double> scores) {
  if (scores.size() < 2) throw DataError("performance z-score needs at least 2 segments");
  const double gm = mean(scores), sd = population_sd(scores);
  std::vector<double> z;
  z.reserve(scores.size());
  for (double s : scores) z.push_back((s - gm) / (sd + kEffortEpsilon));
  return z;
}

double clamp_hbo(double h) {
  if (std::abs(h) >= kMinAbsHbo) return h;
  return std::signbit(h) ? -kMinAbsHbo : kMinAbsHbo;
}

EffortZ zscore_effort(std::span<const double> mean_hbo, EffortMode mode) {
  if (mean_hbo.size() < 2) throw DataError("effort z-score needs at least 2 segments");
  EffortZ out;
  std::vector<double> recip;
  recip.reserve(mean_hbo.size());
  for (double h : mean_hbo) recip.push_back(1.0 / clamp_hbo(h));
  if (mode == EffortMode::conventional) {
    const double gm = mean(recip), sd = population_sd(recip);
    for (double q : recip) out.ce_z.push_back((q - gm) / (sd + kEffortEpsilon));
    return out;
  }
  const double gm = mean(mean_hbo), sd = population_sd(mean_hbo);
  if (sd == 0.0) {
    out.degenerate = true;
    out.ce_z.assign(mean_hbo.size(), 0.0);
    return out;
  }
  const double inv_gm = 1.0 / clamp_hbo(gm);
  for (double q : recip) out.ce_z.push_back((q - inv_gm) / (1.0 / sd));
  return out;
}

RneRni rne_rni(double p_z, double ce_z) {
  const double root2 = std::sqrt(2.0);
  return {(p_z - ce_z) / root2, (p_z + ce_z) / root2};
}

std::vector<SegmentAggregate> aggregate_segments(const std::vector<Trial>& trials,
                                                 const std::vector<double>& scores) {
  if (trials.size() != scores.size()) throw ShapeError("aggregate_segments: one score per trial");
  struct Acc {
    SegmentAggregate agg;
    double hbo_sum = 0.0;
    std::size_t cells = 0;
    double score_sum = 0.0;
    std::size_t trials = 0;
  };
  std::vector<Acc> acc;
  std::map<std::pair<std::string, int>, std::size_t> index;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    const auto key = std::make_pair(t.participant_id, t.segment);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, acc.size()).first;
      acc.push_back({{t.participant_id, t.session, t.segment, 0.0, 0.0}});
    }
    Acc& a = acc[it->second];
    if (a.agg.session != t.session) throw DataError("segment appears in two sessions");
    for (double v : t.hbo.values()) {
      if (!std::isfinite(v)) throw DataError("aggregate_segments: non-finite ΔHbO; impute first");
      a.hbo_sum += v;
    }
    a.cells += t.hbo.size();
    a.score_sum += scores[i];
    ++a.trials;
  }
  std::vector<SegmentAggregate> out;
  out.reserve(acc.size());
  for (auto& a : acc) {
    a.agg.mean_hbo = a.hbo_sum / static_cast<double>(a.cells);
    a.agg.mean_score = a.score_sum / static_cast<double>(a.trials);
    out.push_back(a.agg);
  }
  return out;
}

std::vector<EffortRecord> compute_effort(const std::vector<SegmentAggregate>& segments,
                                         EffortSource source, EffortMode mode) {
  // Group indices by (participant, session), keeping first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::pair<std::string, int>, std::size_t> index;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto key = std::make_pair(segments[i].participant_id, segments[i].session);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.emplace_back();
    }
    groups[it->second].push_back(i);
  }
  std::vector<EffortRecord> records(segments.size());
  for (const auto& g : groups) {
    std::vector<double> scores, hbo;
    for (std::size_t i : g) {
      scores.push_back(segments[i].mean_score);
      hbo.push_back(segments[i].mean_hbo);
    }
    const auto p_z = zscore_performance(scores);
    const auto ce = zscore_effort(hbo, mode);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const SegmentAggregate& s = segments[g[k]];
      const RneRni rr = rne_rni(p_z[k], ce.ce_z[k]);
      records[g[k]] = EffortRecord{s.participant_id, s.session, s.segment, source,
                                   s.mean_hbo,       s.mean_score, p_z[k], ce.ce_z[k],
                                   rr.rne,           rr.rni,       ce.degenerate};
    }
  }
  return records;
}

std::pair<double, double> mae_and_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("mae_and_r: bad lengths");
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) abs_sum += std::abs(a[i] - b[i]);
  const double mae = abs_sum / static_cast<double>(a.size());
  double r = std::numeric_limits<double>::quiet_NaN();
  if (a.size() >= 3) {
    const PearsonResult p = pearson(a, b);
    if (!p.degenerate) r = p.r;
  }
  return {mae, r};
}

namespace {

ErrorSummary summarize(const std::string& id, const std::vector<const EffortRecord*>& act,
                       const std::vector<const EffortRecord*>& pred) {
  std::vector<double> ra, rp, ia, ip;
  for (std::size_t i = 0; i < act.size(); ++i) {
    ra.push_back(act[i]->rne);
    rp.push_back(pred[i]->rne);
    ia.push_back(act[i]->rni);
    ip.push_back(pred[i]->rni);
  }
  ErrorSummary s;
  s.participant_id = id;
  s.n = act.size();
  std::tie(s.rne_mae, s.rne_r) = mae_and_r(ra, rp);
  std::tie(s.rni_mae, s.rni_r) = mae_and_r(ia, ip);
  return s;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json summary_json(const ErrorSummary& s) {
  return {{"participant_id", s.participant_id}, {"n", s.n},
          {"rne_mae", s.rne_mae},               {"rne_r", number_or_null(s.rne_r)},
          {"rni_mae", s.rni_mae},               {"rni_r", number_or_null(s.rni_r)}};
}

}  // namespace

EffortComparison compare_effort(const std::vector<EffortRecord>& actual,
                                const std::vector<EffortRecord>& predicted) {
  if (actual.empty()) throw DataError("compare_effort: no records");
  std::string mismatches;
  if (actual.size() != predicted.size()) {
    mismatches = " record counts differ (" + std::to_string(actual.size()) + " vs " +
                 std::to_string(predicted.size()) + ")";
  } else {
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const auto& a = actual[i];
      const auto& p = predicted[i];
      if (a.participant_id != p.participant_id || a.session != p.session ||
          a.segment != p.segment) {
        mismatches += " " + a.participant_id + "/s" + std::to_string(a.session) + "/g" +
                      std::to_string(a.segment) + "<>" + p.participant_id + "/s" +
                      std::to_string(p.session) + "/g" + std::to_string(p.segment);
      }
    }
  }
  if (!mismatches.empty()) throw DataError("compare_effort: misaligned segments:" + mismatches);

  EffortComparison out;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<const EffortRecord*>, std::vector<const EffortRecord*>>>
      by_participant;
  std::vector<const EffortRecord*> all_a, all_p;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const std::string& id = actual[i].participant_id;
    if (!by_participant.count(id)) order.push_back(id);
    by_participant[id].first.push_back(&actual[i]);
    by_participant[id].second.push_back(&predicted[i]);
    all_a.push_back(&actual[i]);
    all_p.push_back(&predicted[i]);
  }
  for (const auto& id : order) {
    const auto& [a, p] = by_participant[id];
    out.participants.push_back(summarize(id, a, p));
  }
  out.pooled = summarize(kPooledId, all_a, all_p);
  for (const char* metric : {"rne", "rni"}) {
    const bool rne = metric[2] == 'e';
    for (std::size_t i = 0; i < actual.size(); ++i) {
      out.scatter.push_back({metric, actual[i].participant_id, actual[i].session,
                             actual[i].segment, rne ? actual[i].rne : actual[i].rni,
                             rne ? predicted[i].rne : predicted[i].rni});
    }
  }
  return out;
}

nlohmann::json EffortComparison::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : participants) rows.push_back(summary_json(s));
  return {{"participants", rows},
          {"pooled", summary_json(pooled)},
          {"scatter_points_per_metric", scatter.size() / 2}};
}

}  // namespace cogeffort
