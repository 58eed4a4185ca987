#include "imputekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace imputekit {

namespace {

void check_pair(const MixedTable& complete, const MixedTable& imputed) {
  if (!(complete.schema() == imputed.schema()) || complete.rows() != imputed.rows()) {
    throw Error(ErrorCode::SchemaMismatch, "complete and imputed tables differ in schema or shape");
  }
}

double population_variance(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

}  // namespace

ErrorScores score(const MixedTable& complete, const MixedTable& imputed, const MissingMask& mask) {
  check_pair(complete, imputed);
  ErrorScores out;
  std::vector<double> truth;
  double squared = 0.0;
  std::size_t wrong = 0;
  for (const auto& e : mask.entries()) {
    if (e.provenance != Provenance::Amputed) continue;
    if (e.row >= complete.rows() || e.col >= complete.cols()) {
      throw Error(ErrorCode::InvalidArgument, "mask entry outside the table");
    }
    const double t = complete.raw(e.row, e.col);
    const double v = imputed.raw(e.row, e.col);
    if (std::isnan(t) || std::isnan(v)) {
      throw Error(ErrorCode::InvalidArgument, "scored cell (" + std::to_string(e.row + 1) + ", " +
                                                  std::to_string(e.col + 1) +
                                                  ") is missing in the complete or imputed table");
    }
    if (complete.kind(e.col).is_quantitative()) {
      truth.push_back(t);
      squared += (v - t) * (v - t);
    } else {
      ++out.categorical_cells;
      wrong += v != t;
    }
  }
  out.quantitative_cells = truth.size();
  if (!truth.empty()) {
    const double var = population_variance(truth);
    if (var > 0) {
      out.nrmse = std::sqrt(squared / static_cast<double>(truth.size()) / var);
    } else if (squared == 0.0) {
      out.nrmse = 0.0;
    } else {
      out.variance_zero = true;
    }
  }
  if (out.categorical_cells > 0) {
    out.pfc = static_cast<double>(wrong) / static_cast<double>(out.categorical_cells);
  }
  return out;
}

std::optional<double> nrmse(const MixedTable& complete, const MixedTable& imputed,
                            const MissingMask& mask) {
  return score(complete, imputed, mask).nrmse;
}

std::optional<double> pfc(const MixedTable& complete, const MixedTable& imputed,
                          const MissingMask& mask) {
  return score(complete, imputed, mask).pfc;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "pearson needs two equally long series of >= 2 values");
  }
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
  };
  if (constant(x) || constant(y)) throw Error(ErrorCode::ConstantInput, "pearson of a constant series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> encode_categorical_against(std::span<const double> qual,
                                               std::span<const double> quant) {
  if (qual.size() != quant.size()) {
    throw Error(ErrorCode::InvalidArgument, "encoding needs equally long columns");
  }
  std::map<double, std::pair<double, std::size_t>> groups;
  for (std::size_t i = 0; i < qual.size(); ++i) {
    if (std::isnan(qual[i]) || std::isnan(quant[i])) {
      throw Error(ErrorCode::IncompleteInput, "encoding needs fully observed columns");
    }
    auto& g = groups[qual[i]];
    g.first += quant[i];
    ++g.second;
  }
  std::vector<double> out;
  out.reserve(qual.size());
  for (double level : qual) {
    const auto& g = groups[level];
    out.push_back(g.first / static_cast<double>(g.second));
  }
  return out;
}

const char* to_string(SkewVariant v) noexcept {
  return v == SkewVariant::AsWritten ? "as_written" : "standardized";
}

std::vector<PairCorrelation> pair_correlations(const MixedTable& table) {
  const std::size_t p = table.cols();
  if (table.has_missing()) {
    throw Error(ErrorCode::IncompleteInput, "structural indices need a complete table");
  }
  for (std::size_t c = 0; c < p; ++c) {
    if (!table.kind(c).is_quantitative()) continue;
    const auto col = table.column(c);
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; })) {
      throw Error(ErrorCode::ConstantColumn, "column '" + table.name(c) + "' is constant");
    }
  }
  std::vector<PairCorrelation> out;
  for (std::size_t j = 0; j + 1 < p; ++j) {
    for (std::size_t l = j + 1; l < p; ++l) {
      const bool qj = table.kind(j).is_quantitative();
      const bool ql = table.kind(l).is_quantitative();
      if (!qj && !ql) continue;
      const auto a = table.column(j);
      const auto b = table.column(l);
      double r = 0.0;
      if (qj && ql) {
        r = pearson(a, b);
      } else if (qj) {
        const auto encoded = encode_categorical_against(b, a);
        r = pearson(encoded, a);
      } else {
        const auto encoded = encode_categorical_against(a, b);
        r = pearson(encoded, b);
      }
      out.push_back({j, l, r});
    }
  }
  return out;
}

StructuralIndices structural_indices(const MixedTable& table, SkewVariant variant) {
  const std::size_t p = table.cols();
  if (p < 2) throw Error(ErrorCode::TooFewPairs, "structural indices need at least 2 columns");
  std::vector<double> rho;
  for (const auto& pair : pair_correlations(table)) rho.push_back(std::abs(pair.rho));
  if (rho.empty()) throw Error(ErrorCode::TooFewPairs, "no column pair with a quantitative member");

  const double k = static_cast<double>(rho.size());
  StructuralIndices out;
  out.p = p;
  out.pairs = rho.size();
  out.skew_variant = variant;
  out.rho_abs = std::accumulate(rho.begin(), rho.end(), 0.0) / k;
  double m2 = 0.0, m3 = 0.0;
  for (double r : rho) {
    const double d = r - out.rho_abs;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= k;
  m3 /= k;
  out.sd_abs = std::sqrt(m2);
  if (out.sd_abs > 0) {
    out.skew_abs = variant == SkewVariant::AsWritten ? m3 / out.sd_abs
                                                     : m3 / (out.sd_abs * out.sd_abs * out.sd_abs);
  }
  return out;
}

const char* to_string(Strength s) noexcept {
  switch (s) {
    case Strength::Strong:
      return "strong";
    case Strength::Moderate:
      return "moderate";
    case Strength::Weak:
      break;
  }
  return "weak";
}

Strength strength_label(double rho) {
  if (!(std::abs(rho) <= 1.0)) throw Error(ErrorCode::InvalidArgument, "correlation outside [-1, 1]");
  const double a = std::abs(rho);
  if (a >= 0.65) return Strength::Strong;
  if (a >= 0.35) return Strength::Moderate;
  return Strength::Weak;
}

double relative_gap(double x, double reference) {
  if (reference == 0.0) throw Error(ErrorCode::ZeroReference, "relative gap against 0");
  return (x - reference) / reference;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "boxplot of no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  BoxplotStats b;
  b.n = s.size();
  b.min = s.front();
  b.max = s.back();
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  const double n = static_cast<double>(s.size());
  b.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (s.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - b.mean) * (v - b.mean);
    b.sd = std::sqrt(ss / (n - 1.0));
  }
  const double iqr = b.q3 - b.q1;
  const double low_fence = b.q1 - 1.5 * iqr;
  const double high_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::find_if(s.begin(), s.end(), [&](double v) { return v >= low_fence; });
  b.whisker_high = *std::find_if(s.rbegin(), s.rend(), [&](double v) { return v <= high_fence; });
  return b;
}

}  // namespace imputekit
