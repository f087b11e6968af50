#include "pmsys/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <Eigen/Dense>
#include <limits>
#include <numeric>
#include <string>

#include "pmsys/error.hpp"

namespace pmsys::stats {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains a non-finite value");
  }
}

void require_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) throw ValidationError("series lengths differ");
  if (x.size() < min_len) throw ValidationError("series need at least " + std::to_string(min_len) + " values");
  require_finite(x, "x");
  require_finite(y, "y");
}

double centered_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  if (saa == 0 || sbb == 0) throw ValidationError("correlation undefined for a constant series");
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Intercept column followed by the given columns.
Eigen::MatrixXd design(std::span<const Series> columns, std::size_t n) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size() + 1));
  x.col(0).setOnes();
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw ValidationError("predictor lengths differ");
    require_finite(columns[j], "predictor");
    x.col(static_cast<Eigen::Index>(j + 1)) = to_vector(columns[j]);
  }
  return x;
}

struct Projection {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::Index rank = 0;
};

Projection project(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  Projection p;
  p.rank = qr.rank();
  p.coefficients = qr.solve(y);
  p.residuals = y - x * p.coefficients;
  return p;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& residuals) {
  const double sst = (y.array() - y.mean()).square().sum();
  if (sst == 0) return 1.0;
  return std::clamp(1.0 - residuals.squaredNorm() / sst, 0.0, 1.0);
}

void merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi,
                 unsigned long long& swaps) {
  if (hi - lo < 2) return;
  const auto mid = lo + (hi - lo) / 2;
  merge_count(v, buf, lo, mid, swaps);
  merge_count(v, buf, mid, hi, swaps);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<long>(lo), buf.begin() + static_cast<long>(hi), v.begin() + static_cast<long>(lo));
}

unsigned long long tied_pairs(const std::vector<double>& sorted) {
  unsigned long long total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<unsigned long long>(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 2);
  const auto n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  // Pairs tied in x, and tied in both x and y.
  unsigned long long tied_x = 0;
  unsigned long long tied_xy = 0;
  {
    std::size_t run_x = 1, run_xy = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
      const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
      if (same_x) {
        ++run_x;
      } else {
        tied_x += static_cast<unsigned long long>(run_x) * (run_x - 1) / 2;
        run_x = 1;
      }
      if (same_xy) {
        ++run_xy;
      } else {
        tied_xy += static_cast<unsigned long long>(run_xy) * (run_xy - 1) / 2;
        run_xy = 1;
      }
    }
  }

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  unsigned long long swaps = 0;
  merge_count(ys, buf, 0, n, swaps);
  const unsigned long long tied_y = tied_pairs(ys);

  const unsigned long long pairs = static_cast<unsigned long long>(n) * (n - 1) / 2;
  const unsigned long long not_tied_x = pairs - tied_x;
  const unsigned long long not_tied_y = pairs - tied_y;
  if (not_tied_x == 0 || not_tied_y == 0) throw ValidationError("tau-b undefined for a constant series");
  // concordant - discordant
  const long long numerator = static_cast<long long>(pairs - tied_x - tied_y + tied_xy) - 2LL * static_cast<long long>(swaps);
  return static_cast<double>(numerator) /
         std::sqrt(static_cast<double>(not_tied_x) * static_cast<double>(not_tied_y));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 3);
  return centered_correlation(to_vector(x), to_vector(y));
}

Series midranks(std::span<const double> x) {
  const auto n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  Series ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 3);
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson(rx, ry);
}

double partial_pearson(std::span<const double> x, std::span<const double> y, std::span<const Series> controls) {
  require_pair(x, y, 3);
  if (controls.empty()) return pearson(x, y);
  const auto n = x.size();
  const auto design_matrix = design(controls, n);
  if (static_cast<Eigen::Index>(n) <= design_matrix.cols()) {
    throw ValidationError("partial correlation needs more rows than controls + 1");
  }
  const auto vx = to_vector(x);
  const auto vy = to_vector(y);
  const auto px = project(design_matrix, vx);
  if (px.rank < design_matrix.cols()) throw ValidationError("control variables are rank deficient");
  const auto py = project(design_matrix, vy);

  auto check = [](const Eigen::VectorXd& original, const Eigen::VectorXd& residual, const char* name) {
    const double sst = (original.array() - original.mean()).square().sum();
    if (sst == 0 || residual.squaredNorm() <= 1e-20 * sst) {
      throw ValidationError(std::string(name) + " is fully explained by the controls");
    }
  };
  check(vx, px.residuals, "x");
  check(vy, py.residuals, "y");
  return centered_correlation(px.residuals, py.residuals);
}

std::vector<VifEntry> vif(std::span<const Series> predictors) {
  const auto p = predictors.size();
  if (p < 2) throw ValidationError("VIF needs at least two predictors");
  const auto n = predictors.front().size();
  if (n <= p) throw ValidationError("VIF needs more rows than predictors");

  std::vector<VifEntry> out;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<Series> others;
    for (std::size_t k = 0; k < p; ++k) {
      if (k != j) others.push_back(predictors[k]);
    }
    const auto x = design(others, n);
    if (predictors[j].size() != n) throw ValidationError("predictor lengths differ");
    const auto target = to_vector(predictors[j]);
    const auto fit = project(x, target);
    VifEntry e;
    const double sst = (target.array() - target.mean()).square().sum();
    const bool degenerate = sst == 0 || fit.residuals.squaredNorm() <= 1e-12 * sst;
    e.r_squared = degenerate ? 1.0 : r_squared(target, fit.residuals);
    if (degenerate) {
      e.vif = std::numeric_limits<double>::infinity();
      e.tolerance = 0.0;
    } else {
      e.tolerance = 1.0 - e.r_squared;
      e.vif = 1.0 / e.tolerance;
    }
    e.collinear = e.vif > kVifCollinearityThreshold;
    out.push_back(e);
  }
  return out;
}

namespace {

Eigen::MatrixXd rows_to_matrix(std::span<const Series> rows) {
  if (rows.empty()) throw ValidationError("no rows");
  const auto p = rows.front().size();
  if (p == 0) throw ValidationError("rows have no columns");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) throw ValidationError("ragged rows");
    require_finite(rows[i], "row");
    m.row(static_cast<Eigen::Index>(i)) = to_vector(rows[i]).transpose();
  }
  return m;
}

Eigen::MatrixXd invert_covariance(const Eigen::MatrixXd& cov) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw ValidationError("covariance matrix is singular; remove constant or linearly dependent columns");
  }
  return lu.inverse();
}

}  // namespace

MahalanobisResult mahalanobis_screen(std::span<const Series> rows, double critical) {
  const auto m = rows_to_matrix(rows);
  if (m.rows() <= m.cols()) throw ValidationError("need more rows than columns for a covariance estimate");
  const Eigen::RowVectorXd mean = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m.rows() - 1);
  const auto inv = invert_covariance(cov);

  MahalanobisResult result;
  result.mean.assign(mean.data(), mean.data() + mean.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::RowVectorXd d = centered.row(i);
    const double d2 = std::max(0.0, (d * inv * d.transpose())(0, 0));
    result.d2.push_back(d2);
    result.keep.push_back(!(d2 > critical));
  }
  return result;
}

std::vector<double> mahalanobis_distances(std::span<const Series> points, std::span<const double> mean,
                                          std::span<const Series> covariance_rows) {
  const auto pts = rows_to_matrix(points);
  const auto cov = rows_to_matrix(covariance_rows);
  if (cov.rows() != cov.cols() || cov.rows() != pts.cols() || static_cast<Eigen::Index>(mean.size()) != pts.cols()) {
    throw ValidationError("dimension mismatch between points, mean and covariance");
  }
  const auto inv = invert_covariance(cov);
  const Eigen::RowVectorXd mu = to_vector(mean).transpose();
  std::vector<double> out;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::RowVectorXd d = pts.row(i) - mu;
    out.push_back(std::max(0.0, (d * inv * d.transpose())(0, 0)));
  }
  return out;
}

double student_t_cdf(double t, double degrees_of_freedom) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const boost::math::students_t dist(degrees_of_freedom);
  return boost::math::cdf(dist, t);
}

RegressionFit ols(std::span<const Series> predictors, std::span<const double> y) {
  require_finite(y, "y");
  const auto n = y.size();
  const auto x = design(predictors, n);
  const auto p = static_cast<std::size_t>(x.cols());
  if (n <= p) throw ValidationError("OLS needs more rows than coefficients");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw ValidationError("design matrix is rank deficient");
  const auto vy = to_vector(y);
  const Eigen::VectorXd beta = qr.solve(vy);
  const Eigen::VectorXd resid = vy - x * beta;

  // (X^T X)^-1 = P R^-1 R^-T P^T
  const auto k = x.cols();
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd unscaled_perm = r_inv * r_inv.transpose();
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd unscaled = perm * unscaled_perm * perm.transpose();

  RegressionFit fit;
  fit.degrees_of_freedom = n - p;
  const double df = static_cast<double>(fit.degrees_of_freedom);
  const double sigma2 = resid.squaredNorm() / df;
  fit.r_squared = r_squared(vy, resid);
  fit.residuals.assign(resid.data(), resid.data() + resid.size());

  const double sd_y = std::sqrt((vy.array() - vy.mean()).square().sum() / static_cast<double>(n - 1));
  for (Eigen::Index j = 0; j < k; ++j) {
    const double b = beta(j);
    const double se = std::sqrt(std::max(0.0, sigma2 * unscaled(j, j)));
    double t;
    double pval;
    if (se == 0) {
      t = b == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
      pval = b == 0 ? 1.0 : 0.0;
    } else {
      t = b / se;
      pval = std::clamp(2.0 * student_t_cdf(-std::fabs(t), df), 0.0, 1.0);
    }
    fit.coefficients.push_back(b);
    fit.standard_errors.push_back(se);
    fit.t_statistics.push_back(t);
    fit.p_values.push_back(pval);
    if (j == 0 || sd_y == 0) {
      fit.standardized.push_back(kNaN);
    } else {
      const auto col = x.col(j);
      const double sd_x = std::sqrt((col.array() - col.mean()).square().sum() / static_cast<double>(n - 1));
      fit.standardized.push_back(b * sd_x / sd_y);
    }
  }
  return fit;
}

}  // namespace pmsys::stats
