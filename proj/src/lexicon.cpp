#include "traitlex/lexicon.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "traitlex/json_util.hpp"

namespace traitlex {

namespace {

struct Column {
  std::vector<double> pos;  // magnitudes of strictly positive entries, descending
  std::vector<double> neg;  // magnitudes of strictly negative entries, descending
  std::int64_t zeros = 0;
};

Column split_column(
    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& col) {
  Column c;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (col[i] > 0)
      c.pos.push_back(static_cast<double>(col[i]));
    else if (col[i] < 0)
      c.neg.push_back(static_cast<double>(-col[i]));
    else
      ++c.zeros;
  }
  std::sort(c.pos.rbegin(), c.pos.rend());
  std::sort(c.neg.rbegin(), c.neg.rend());
  return c;
}

double tanh_sum(const std::vector<double>& mags, double n_div) {
  double s = 0.0;
  for (double m : mags) s += std::tanh(m / n_div);
  return s;
}

}  // namespace

PolarityAverages polarity_averages(
    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& column,
    ZeroConvention zeros) {
  Vec as_double = column.cast<double>();
  return polarity_averages(as_double, zeros);
}

PolarityAverages polarity_averages(const Eigen::Ref<const Vec>& column,
                                   ZeroConvention zeros) {
  PolarityAverages out;
  double pos_sum = 0.0, neg_sum = 0.0;
  std::int64_t zero_count = 0;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    double v = column[i];
    if (v > 0.0) {
      pos_sum += v;
      ++out.m;
    } else if (v < 0.0) {
      neg_sum += -v;
      ++out.n;
    } else {
      ++zero_count;
    }
  }
  if (zeros == ZeroConvention::Include) out.m += zero_count;
  if (out.m > 0) out.avg_pos = pos_sum / static_cast<double>(out.m);
  if (out.n > 0) out.avg_neg_mag = neg_sum / static_cast<double>(out.n);
  return out;
}

// The two constraints S*Avg_tanh(anchor) = M and S*Avg_tanh(other) = M are
// solved by nested bisection: the inner loop finds N for a given S against
// the anchor side (strictly monotone in N), the outer loop moves S against
// the other side. When no interior solution exists the residual gap closes
// only in the tanh saturation limit, so a final phase fixes S at the anchor
// feasibility bound and halves N until both sides saturate. The anchor is
// the polarity with the larger raw mean (ties broken on the sorted
// magnitudes) so that negating the column reproduces identical (N, S) and
// the transform stays exactly odd.
SolveOutcome solve_ns(
    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& column,
    double target_m, double eps, const SolveOptions& options) {
  if (!(target_m > 0.0)) throw Error("solve_ns: target M must be positive");
  if (!(eps > 0.0)) throw Error("solve_ns: eps must be positive");
  Column c = split_column(column);
  if (c.pos.empty() && c.neg.empty()) throw SolverError("no signal for trait");

  const double pos_den = static_cast<double>(
      c.pos.size() + (options.zeros == ZeroConvention::Include
                          ? static_cast<std::size_t>(c.zeros)
                          : 0));
  const double neg_den = static_cast<double>(c.neg.size());

  double raw_pos_mean = 0.0, raw_neg_mean = 0.0;
  for (double m : c.pos) raw_pos_mean += m;
  for (double m : c.neg) raw_neg_mean += m;
  raw_pos_mean = c.pos.empty() ? 0.0 : raw_pos_mean / pos_den;
  raw_neg_mean = c.neg.empty() ? 0.0 : raw_neg_mean / neg_den;

  bool anchor_is_pos;
  if (c.neg.empty())
    anchor_is_pos = true;
  else if (c.pos.empty())
    anchor_is_pos = false;
  else if (raw_pos_mean != raw_neg_mean)
    anchor_is_pos = raw_pos_mean > raw_neg_mean;
  else
    anchor_is_pos = c.pos >= c.neg;  // lexicographic on descending magnitudes

  const std::vector<double>& anchor = anchor_is_pos ? c.pos : c.neg;
  const std::vector<double>& other = anchor_is_pos ? c.neg : c.pos;
  const double anchor_den = anchor_is_pos ? pos_den : neg_den;
  const double other_den = anchor_is_pos ? neg_den : pos_den;

  auto anchor_avg = [&](double n_div) { return tanh_sum(anchor, n_div) / anchor_den; };
  auto other_avg = [&](double n_div) {
    return other.empty() ? 0.0 : tanh_sum(other, n_div) / other_den;
  };

  // Largest N with S*anchor_avg(N) >= M (anchor_avg is decreasing in N).
  auto inner_solve = [&](double s_amp) {
    double lo = anchor.back() / 40.0;  // deep saturation: anchor_avg maximal
    double hi = anchor.front();
    for (int i = 0; i < 200 && s_amp * anchor_avg(hi) >= target_m; ++i) hi *= 2.0;
    for (int i = 0; i < 100; ++i) {
      double mid = 0.5 * (lo + hi);
      if (s_amp * anchor_avg(mid) >= target_m)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };

  SolveOutcome best;
  best.residual_pos = best.residual_neg = std::numeric_limits<double>::infinity();
  double best_max = std::numeric_limits<double>::infinity();
  int evals = 0;

  auto check = [&](double n_div, double s_amp) {
    ++evals;
    double ra = std::abs(s_amp * anchor_avg(n_div) - target_m);
    double ro = other.empty() ? 0.0 : std::abs(s_amp * other_avg(n_div) - target_m);
    double rmax = std::max(ra, ro);
    if (rmax < best_max) {
      best_max = rmax;
      best.params.n_divisor = n_div;
      best.params.s_amplitude = s_amp;
      best.residual_pos = anchor_is_pos ? ra : ro;
      best.residual_neg = anchor_is_pos ? ro : ra;
    }
    double rho = other.empty() ? 0.0 : s_amp * other_avg(n_div) - target_m;
    return std::pair<double, double>(rmax, rho);
  };

  // Smallest S for which the anchor constraint is reachable; with excluded
  // zeros the tanh average tops out at 1 and this is just M.
  const double anchor_cap = anchor_avg(anchor.back() / 40.0);
  const double s_floor = target_m / anchor_cap;

  auto finish = [&](bool converged_now) {
    best.params.iterations = evals;
    best.params.converged = converged_now || best_max <= eps;
    return best;
  };

  if (other.empty()) {
    const double s_amp = 2.0 * target_m;
    check(inner_solve(s_amp), s_amp);
    return finish(best_max <= eps);
  }

  const double s_lo = s_floor * (1.0 + 0x1p-40);
  auto [r0, rho_prev] = check(inner_solve(s_lo), s_lo);
  if (r0 <= eps) return finish(true);

  double s_prev = s_lo;
  bool bracketed = false;
  double bra = 0.0, brb = 0.0, rho_a = 0.0;
  for (int k = 1; k <= 40 && evals < options.max_iterations; ++k) {
    double s_amp = s_floor * std::pow(2.0, k);
    auto [r, rho] = check(inner_solve(s_amp), s_amp);
    if (r <= eps) return finish(true);
    if (rho_prev * rho <= 0.0) {
      bracketed = true;
      bra = s_prev;
      brb = s_amp;
      rho_a = rho_prev;
      break;
    }
    s_prev = s_amp;
    rho_prev = rho;
  }
  if (bracketed) {
    for (int i = 0; i < 200 && evals < options.max_iterations; ++i) {
      double mid = 0.5 * (bra + brb);
      auto [r, rho] = check(inner_solve(mid), mid);
      if (r <= eps) return finish(true);
      if (rho_a * rho <= 0.0)
        brb = mid;
      else {
        bra = mid;
        rho_a = rho;
      }
    }
  }
  // saturation phase: S at the feasibility bound, N halving until both
  // polarities flatten onto +-S
  double n_div = anchor.back() / 19.0;
  for (int i = 0; i < 120 && evals < options.max_iterations; ++i) {
    auto [r, rho] = check(n_div, s_floor);
    if (r <= eps) return finish(true);
    n_div *= 0.5;
  }
  return finish(false);
}

RawCounts iterate_assignment(const AnswerCorpus& corpus, const Vocab& vocab) {
  if (vocab.size() == 0) throw Error("iterate_assignment: empty vocab");
  RawCounts raw = RawCounts::Zero(vocab.size(), kNumTraits);
  for (const auto& entry : corpus.entries) {
    const std::int64_t delta = entry.polarity == Polarity::High ? 1 : -1;
    const int col = static_cast<int>(entry.trait);
    TokenizeResult toks = tokenize(vocab, entry.text);
    for (TokenId id : toks.ids) raw(id, col) += delta;
  }
  return raw;
}

BuildOutput normalization_scaling(const RawCounts& raw, const Vocab& vocab,
                                  const AnswerCorpus& corpus,
                                  const BuildOptions& options) {
  if (raw.rows() != vocab.size())
    throw Error("normalization_scaling: raw counts built against a different vocab");
  BuildOutput out;
  out.report.all_converged = true;
  std::array<bool, kNumTraits> usable{};

  SolveOptions sopt;
  sopt.zeros = options.zeros;
  sopt.max_iterations = options.max_iterations;

  for (int t = 0; t < kNumTraits; ++t) {
    TraitScaleReport& tr = out.report.traits[static_cast<std::size_t>(t)];
    tr.raw = polarity_averages(raw.col(t), options.zeros);
    tr.nonzero = (raw.col(t).array() != 0).count();
    try {
      SolveOutcome solved = solve_ns(raw.col(t), options.m_targets[t],
                                     options.epsilon, sopt);
      tr.params = solved.params;
      tr.residual_pos = solved.residual_pos;
      tr.residual_neg = solved.residual_neg;
      usable[static_cast<std::size_t>(t)] = solved.params.converged;
      if (!solved.params.converged) {
        out.report.all_converged = false;
        if (options.require_convergence)
          throw SolverError("trait " + std::string(kTraitLabels[t]) +
                            ": solver did not converge (max residual " +
                            format_double(std::max(solved.residual_pos,
                                                   solved.residual_neg)) +
                            ")");
      }
    } catch (const SolverError& e) {
      if (options.require_convergence)
        throw SolverError("trait " + std::string(kTraitLabels[t]) + ": " + e.what());
      out.report.all_converged = false;
      tr.error = e.what();
    }
  }

  LexiconMeta meta;
  meta.m_targets = options.m_targets;
  meta.epsilon = options.epsilon;
  for (int t = 0; t < kNumTraits; ++t)
    meta.scale[static_cast<std::size_t>(t)] =
        out.report.traits[static_cast<std::size_t>(t)].params;
  meta.vocab_fingerprint = vocab.fingerprint();
  meta.corpus_digest = corpus.entries.empty() ? "" : corpus_digest(corpus);

  std::map<TokenId, TraitVec> values;
  for (Eigen::Index z = 0; z < raw.rows(); ++z) {
    if ((raw.row(z).array() == 0).all()) continue;
    TraitVec v = TraitVec::Zero();
    bool any = false;
    for (int t = 0; t < kNumTraits; ++t) {
      if (raw(z, t) == 0 || !usable[static_cast<std::size_t>(t)]) continue;
      const ScaleParams& sp = meta.scale[static_cast<std::size_t>(t)];
      v[t] = sp.s_amplitude *
             std::tanh(static_cast<double>(raw(z, t)) / sp.n_divisor);
      any = true;
    }
    if (any) values.emplace(static_cast<TokenId>(z), v);
  }
  out.lexicon = Lexicon(std::move(values), std::move(meta));
  return out;
}

std::string serialize_lexicon(const Lexicon& lexicon) {
  const LexiconMeta& meta = lexicon.meta();
  JsonWriter w;
  w.begin_object();
  w.key("version").value(std::int64_t{1});
  w.key("vocab_fingerprint").value(meta.vocab_fingerprint);
  w.key("traits").begin_array();
  for (auto label : kTraitLabels) w.value(label);
  w.end_array();
  w.key("M").begin_array();
  for (int t = 0; t < kNumTraits; ++t) w.value(meta.m_targets[t]);
  w.end_array();
  w.key("epsilon").value(meta.epsilon);
  w.key("scale").begin_array();
  for (const auto& sp : meta.scale) {
    w.begin_object().key("N").value(sp.n_divisor).key("S").value(sp.s_amplitude)
        .end_object();
  }
  w.end_array();
  w.key("corpus_digest").value(meta.corpus_digest);
  w.key("entries").begin_object();
  for (const auto& [id, v] : lexicon.entries()) {
    w.key(std::to_string(id)).begin_array();
    for (int t = 0; t < kNumTraits; ++t) w.value(v[t]);
    w.end_array();
  }
  w.end_object();
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

Lexicon parse_lexicon(std::string_view json_text, std::string_view origin) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(std::string(origin) + ": not a JSON lexicon");
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw Error(std::string(origin) + ": unsupported lexicon version");
  LexiconMeta meta;
  meta.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
  auto traits = j.at("traits");
  if (traits.size() != kNumTraits)
    throw Error(std::string(origin) + ": expected 5 traits");
  for (int t = 0; t < kNumTraits; ++t)
    if (traits[static_cast<std::size_t>(t)].get<std::string>() != kTraitLabels[t])
      throw Error(std::string(origin) + ": unexpected trait order");
  auto m = j.at("M");
  if (m.size() != kNumTraits) throw Error(std::string(origin) + ": bad M vector");
  for (int t = 0; t < kNumTraits; ++t)
    meta.m_targets[t] = m[static_cast<std::size_t>(t)].get<double>();
  meta.epsilon = j.at("epsilon").get<double>();
  auto scale = j.at("scale");
  if (scale.size() != kNumTraits) throw Error(std::string(origin) + ": bad scale");
  for (int t = 0; t < kNumTraits; ++t) {
    auto& sp = meta.scale[static_cast<std::size_t>(t)];
    sp.n_divisor = scale[static_cast<std::size_t>(t)].at("N").get<double>();
    sp.s_amplitude = scale[static_cast<std::size_t>(t)].at("S").get<double>();
    sp.converged = true;
  }
  meta.corpus_digest = j.value("corpus_digest", std::string());
  std::map<TokenId, TraitVec> values;
  for (const auto& [key, arr] : j.at("entries").items()) {
    TokenId id = static_cast<TokenId>(std::stol(key));
    if (arr.size() != kNumTraits)
      throw Error(std::string(origin) + ": entry " + key + " is not a 5-vector");
    TraitVec v;
    for (int t = 0; t < kNumTraits; ++t)
      v[t] = arr[static_cast<std::size_t>(t)].get<double>();
    values.emplace(id, v);
  }
  return Lexicon(std::move(values), std::move(meta));
}

Lexicon load_lexicon(const std::string& path) {
  return parse_lexicon(read_text_file(path), path);
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  write_text_file(path, serialize_lexicon(lexicon));
}

std::string serialize_build_report(const BuildReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("version").value(std::int64_t{1});
  w.key("all_converged").value(report.all_converged);
  w.key("traits").begin_array();
  for (int t = 0; t < kNumTraits; ++t) {
    const TraitScaleReport& tr = report.traits[static_cast<std::size_t>(t)];
    w.begin_object();
    w.key("trait").value(kTraitLabels[t]);
    w.key("converged").value(tr.params.converged);
    w.key("N").value(tr.params.n_divisor);
    w.key("S").value(tr.params.s_amplitude);
    w.key("iterations").value(std::int64_t{tr.params.iterations});
    w.key("residual_pos").value(tr.error.empty() ? tr.residual_pos : 0.0);
    w.key("residual_neg").value(tr.error.empty() ? tr.residual_neg : 0.0);
    w.key("raw_avg_pos").value(tr.raw.avg_pos);
    w.key("raw_avg_neg").value(-tr.raw.avg_neg_mag);  // signed, as averaged
    w.key("positive_count").value(tr.raw.m);
    w.key("negative_count").value(tr.raw.n);
    w.key("nonzero").value(tr.nonzero);
    w.key("error").value(tr.error);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

}  // namespace traitlex
