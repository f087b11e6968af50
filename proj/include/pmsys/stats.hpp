#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmsys::stats {

using Series = std::vector<double>;

/// Kendall rank correlation with tie adjustment (tau-b), O(n log n).
/// Equal lengths >= 2; a constant series throws ValidationError.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Product-moment correlation. Equal lengths >= 3, neither constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their positions.
Series midranks(std::span<const double> x);

/// Pearson correlation of midranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Correlation of the OLS residuals of x and y, each regressed on an intercept
/// plus the controls. No controls -> pearson(x, y). Rank-deficient controls or
/// a residual with no variance throw ValidationError.
double partial_pearson(std::span<const double> x, std::span<const double> y, std::span<const Series> controls);

struct VifEntry {
  double r_squared = 0;
  double tolerance = 0;
  double vif = 0;        // +inf when the predictor is a linear combination of the others
  bool collinear = false;  // VIF > 10 or perfectly collinear
};

inline constexpr double kVifCollinearityThreshold = 10.0;

/// VIF_j = 1 / (1 - R^2_j) regressing predictor j (with intercept) on the rest.
/// Needs >= 2 predictors and more rows than predictors.
std::vector<VifEntry> vif(std::span<const Series> predictors);

struct MahalanobisResult {
  std::vector<double> d2;
  std::vector<bool> keep;  // false iff d2 > critical
  std::vector<double> mean;
};

/// Squared distances of each row from the sample mean under the sample
/// covariance (n - 1 denominator). A singular covariance throws ValidationError.
MahalanobisResult mahalanobis_screen(std::span<const Series> rows, double critical);

/// d^2 of each point for a given mean and covariance.
std::vector<double> mahalanobis_distances(std::span<const Series> points, std::span<const double> mean,
                                          std::span<const Series> covariance_rows);

struct RegressionFit {
  std::vector<double> coefficients;     // intercept first
  std::vector<double> standardized;     // beta weights; intercept entry is NaN
  std::vector<double> standard_errors;
  std::vector<double> t_statistics;
  std::vector<double> p_values;         // two-sided
  std::vector<double> residuals;
  double r_squared = 0;
  std::size_t degrees_of_freedom = 0;
};

/// Least squares of y on an intercept plus the predictor columns. Needs full
/// column rank and more rows than coefficients.
RegressionFit ols(std::span<const Series> predictors, std::span<const double> y);

/// Student t CDF with the given degrees of freedom.
double student_t_cdf(double t, double degrees_of_freedom);

}  // namespace pmsys::stats
