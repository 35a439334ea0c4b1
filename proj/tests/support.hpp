#pragma once

// Test fixtures and independent oracles. Nothing here calls into the code under test
// except to construct inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "metroflow/core_model.hpp"

namespace testing {

using FlowFn = std::function<std::int64_t(std::size_t station_pos, std::size_t date_pos, int slot)>;
using WeatherFn = std::function<metroflow::SliceWeather(std::size_t date_pos, int slot)>;

inline metroflow::SliceWeather mild(std::size_t, int) { return {25.0, 10.0, 70.0, 1010.0, metroflow::RainLevel::None}; }

inline metroflow::Dataset make_dataset(std::vector<int> stations, int n_dates, const FlowFn& flow,
                                       const WeatherFn& weather = mild, int slice_minutes = 60,
                                       metroflow::Date first = metroflow::Date(2018, 4, 2),
                                       metroflow::HolidayCalendar calendar = {}) {
    const int slots = metroflow::slots_per_day(slice_minutes);
    const std::size_t n_slices = static_cast<std::size_t>(n_dates) * static_cast<std::size_t>(slots);
    std::vector<std::int64_t> grid(stations.size() * n_slices);
    std::vector<metroflow::SliceWeather> w(n_slices);
    for (std::size_t s = 0; s < stations.size(); ++s) {
        for (int d = 0; d < n_dates; ++d) {
            for (int k = 0; k < slots; ++k) {
                const std::size_t t = static_cast<std::size_t>(d) * static_cast<std::size_t>(slots) + static_cast<std::size_t>(k);
                grid[s * n_slices + t] = flow(s, static_cast<std::size_t>(d), k);
                if (s == 0) w[t] = weather(static_cast<std::size_t>(d), k);
            }
        }
    }
    return metroflow::Dataset(slice_minutes, std::move(stations), first, n_dates, std::move(grid), std::move(w),
                              std::move(calendar));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("metroflow_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---- oracles ----

/// Solves (A^T A) b = A^T y by Gaussian elimination with partial pivoting, where A is
/// X (row-major, n x p) with a leading column of ones. Returns intercept first.
inline std::vector<double> normal_equation_ols(const std::vector<double>& X, std::size_t n, std::size_t p,
                                               const std::vector<double>& y) {
    const std::size_t q = p + 1;
    auto a = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : X[i * p + j - 1]; };
    std::vector<std::vector<double>> M(q, std::vector<double>(q + 1, 0.0));
    for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t c = 0; c < q; ++c) {
            long double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += static_cast<long double>(a(i, r)) * a(i, c);
            M[r][c] = static_cast<double>(s);
        }
        long double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += static_cast<long double>(a(i, r)) * y[i];
        M[r][q] = static_cast<double>(s);
    }
    for (std::size_t col = 0; col < q; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < q; ++r) {
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        }
        std::swap(M[col], M[piv]);
        for (std::size_t r = 0; r < q; ++r) {
            if (r == col) continue;
            const double f = M[r][col] / M[col][col];
            for (std::size_t c = col; c <= q; ++c) M[r][c] -= f * M[col][c];
        }
    }
    std::vector<double> beta(q);
    for (std::size_t r = 0; r < q; ++r) beta[r] = M[r][q] / M[r][r];
    return beta;
}

struct BruteSplit {
    int feature = -1;
    double threshold = 0.0;
    double sse = INFINITY;
};

/// Exhaustive best split by total child SSE over every feature and every midpoint
/// between distinct sorted values.
inline BruteSplit brute_force_split(const std::vector<double>& X, std::size_t n, std::size_t d,
                                    const std::vector<double>& y) {
    BruteSplit best;
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) vals.push_back(X[i * d + j]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            const double thr = 0.5 * (vals[k] + vals[k + 1]);
            double sl = 0, sr = 0, nl = 0, nr = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (X[i * d + j] <= thr) sl += y[i], ++nl;
                else sr += y[i], ++nr;
            }
            const double ml = sl / nl, mr = sr / nr;
            double sse = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double m = X[i * d + j] <= thr ? ml : mr;
                sse += (y[i] - m) * (y[i] - m);
            }
            if (best.feature < 0 || sse < best.sse - 1e-9 * (1.0 + std::abs(best.sse))) best = {static_cast<int>(j), thr, sse};
        }
    }
    return best;
}

inline double hand_mean(const std::vector<double>& v) {
    long double s = 0;
    for (const double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

/// Textbook Pearson with long-double accumulation.
inline double hand_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const long double mx = hand_mean(x), my = hand_mean(y);
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace testing
