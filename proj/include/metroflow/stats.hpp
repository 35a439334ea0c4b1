#pragma once

#include <span>
#include <string>
#include <vector>

#include "metroflow/features.hpp"
#include "metroflow/models.hpp"

namespace metroflow::stats {

/// Error metrics. R^2 = 1 - SSE/SST with SST about the mean of `y`; it is NaN
/// and `r2_defined` is false when `y` is constant.
struct Metrics {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    bool r2_defined = true;
};

Metrics metrics(std::span<const double> y, std::span<const double> y_hat);

/// Sample Pearson correlation, clamped to [-1, 1]. Throws ConstantInput.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationRow {
    std::string variable;
    double total = 0.0;
    double workdays = 0.0;
    double weekends = 0.0;
    std::string flag;  // empty, or the subsets where the correlation is undefined
};

/// Correlation of every matrix column with the target on all rows, workday rows
/// and weekend rows. Row order: class dummies, weather, lags, then the rest.
std::vector<CorrelationRow> correlation_table(const features::DesignMatrix& matrix);

struct OlsFit {
    std::vector<double> coefficients;  // intercept first
    double r = 0.0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    double rmse = 0.0;  // residual standard error, sqrt(SSE / (n - p - 1))
    double dw = 0.0;    // NaN when the residuals are zero up to rounding
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> residuals;
};

/**
 * Least squares with intercept via column-pivoted Householder QR.
 * Throws TooFewObservations unless n > p + 1 and RankDeficient naming the
 * dependent columns.
 */
OlsFit ols_fit(models::MatrixView X, std::span<const double> y);

/// sum (e_t - e_{t-1})^2 / sum e_t^2. Throws AllZeroResiduals.
double durbin_watson(std::span<const double> residuals);

}  // namespace metroflow::stats
