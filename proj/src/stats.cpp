#include "metroflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "metroflow/error.hpp"

namespace metroflow::stats {

Metrics metrics(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw LengthMismatch("stats", "metrics", "y and y_hat differ in length");
    if (y.empty()) throw EmptyInput("stats", "metrics", "no observations");
    const double n = static_cast<double>(y.size());
    double abs_sum = 0.0, sse = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - y_hat[i];
        abs_sum += std::abs(e);
        sse += e * e;
        mean += y[i];
    }
    mean /= n;
    double sst = 0.0;
    for (const double v : y) sst += (v - mean) * (v - mean);

    Metrics m;
    m.mae = abs_sum / n;
    m.mse = sse / n;
    m.rmse = std::sqrt(m.mse);
    if (sst > 0.0) {
        m.r2 = 1.0 - sse / sst;
    } else {
        m.r2 = std::numeric_limits<double>::quiet_NaN();
        m.r2_defined = false;
    }
    return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("stats", "pearson", "x and y differ in length");
    if (x.size() < 2) throw InvalidArgument("stats", "pearson", "need at least two observations");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ConstantInput("stats", "pearson", "input has zero variance");
    // The (n - 1) factors of the sample covariance and deviations cancel.
    const double r = (sxy / (n - 1.0)) / (std::sqrt(sxx / (n - 1.0)) * std::sqrt(syy / (n - 1.0)));
    return std::clamp(r, -1.0, 1.0);
}

std::vector<CorrelationRow> correlation_table(const features::DesignMatrix& matrix) {
    if (matrix.rows() < 2) throw InvalidArgument("stats", "correlation_table", "need at least two rows");

    std::vector<std::size_t> order;
    auto take = [&](auto pred) {
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
            if (pred(matrix.column_names[j]) && std::find(order.begin(), order.end(), j) == order.end()) {
                order.push_back(j);
            }
        }
    };
    take([](const std::string& c) { return c.rfind("class_", 0) == 0; });
    for (const char* w : {"temperature", "wind", "humidity", "barometer"}) {
        take([w](const std::string& c) { return c == w; });
    }
    take([](const std::string& c) { return c.rfind("lag", 0) == 0; });
    take([](const std::string&) { return true; });

    std::vector<std::size_t> work_rows, weekend_rows;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        (matrix.day_types[i] == DayType::Workday ? work_rows : weekend_rows).push_back(i);
    }
    auto subset = [](const std::vector<double>& v, const std::vector<std::size_t>& rows) {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto i : rows) out.push_back(v[i]);
        return out;
    };
    const auto y_work = subset(matrix.targets, work_rows);
    const auto y_weekend = subset(matrix.targets, weekend_rows);

    std::vector<CorrelationRow> table;
    for (const auto j : order) {
        const auto x = matrix.column(j);
        CorrelationRow row;
        row.variable = matrix.column_names[j];
        auto guarded = [&row](const char* label, std::span<const double> a, std::span<const double> b) {
            try {
                return pearson(a, b);
            } catch (const Error&) {
                if (!row.flag.empty()) row.flag += '+';
                row.flag += label;
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        row.total = guarded("total", x, matrix.targets);
        row.workdays = guarded("workdays", subset(x, work_rows), y_work);
        row.weekends = guarded("weekends", subset(x, weekend_rows), y_weekend);
        if (!row.flag.empty()) row.flag = "undefined:" + row.flag;
        table.push_back(std::move(row));
    }
    return table;
}

double durbin_watson(std::span<const double> residuals) {
    if (residuals.size() < 2) throw InvalidArgument("stats", "durbin_watson", "need at least two residuals");
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < residuals.size(); ++t) {
        den += residuals[t] * residuals[t];
        if (t > 0) {
            const double d = residuals[t] - residuals[t - 1];
            num += d * d;
        }
    }
    if (den == 0.0) throw AllZeroResiduals("stats", "durbin_watson", "every residual is zero");
    return std::clamp(num / den, 0.0, 4.0);
}

OlsFit ols_fit(models::MatrixView X, std::span<const double> y) {
    constexpr const char* op = "ols_fit";
    const std::size_t n = X.rows, p = X.cols;
    if (y.size() != n) throw LengthMismatch("stats", op, "target length differs from row count");
    if (n <= p + 1) {
        throw TooFewObservations("stats", op,
                                 "need more than " + std::to_string(p + 1) + " observations, got " + std::to_string(n));
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        A(r, 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) A(r, static_cast<Eigen::Index>(j + 1)) = X.at(i, j);
        b(r) = y[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p + 1)) {
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
            if (!cols.empty()) cols += ',';
            cols += perm(k) == 0 ? std::string("intercept") : "x" + std::to_string(perm(k) - 1);
        }
        throw RankDeficient("stats", op, "design matrix is rank deficient; dependent columns: " + cols);
    }
    const Eigen::VectorXd beta = qr.solve(b);
    const Eigen::VectorXd resid = b - A * beta;

    OlsFit fit;
    fit.n = n;
    fit.p = p;
    fit.coefficients.assign(beta.data(), beta.data() + beta.size());
    fit.residuals.assign(resid.data(), resid.data() + resid.size());

    const double mean = b.mean();
    const double sse = resid.squaredNorm();
    const double sst = (b.array() - mean).square().sum();
    // A constant response leaves nothing to explain.
    fit.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    fit.r = std::sqrt(std::max(fit.r2, 0.0));
    const double nn = static_cast<double>(n), pp = static_cast<double>(p);
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * (nn - 1.0) / (nn - pp - 1.0);
    fit.rmse = std::sqrt(sse / (nn - pp - 1.0));
    // Residuals of an exact fit are rounding noise; their ratio means nothing.
    const double noise = 1e-12 * std::sqrt(b.squaredNorm());
    if (std::sqrt(sse) <= noise) {
        fit.dw = std::numeric_limits<double>::quiet_NaN();
    } else {
        fit.dw = durbin_watson(fit.residuals);
    }
    return fit;
}

}  // namespace metroflow::stats
