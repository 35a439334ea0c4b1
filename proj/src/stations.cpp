#include "metroflow/stations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "metroflow/error.hpp"

namespace metroflow::stations {

std::string_view to_string(DayFilter filter) {
    switch (filter) {
        case DayFilter::Workday: return "workday";
        case DayFilter::Weekend: return "weekend";
        case DayFilter::All: return "all";
    }
    return "all";
}

bool matches(DayFilter filter, DayType type) {
    switch (filter) {
        case DayFilter::Workday: return type == DayType::Workday;
        case DayFilter::Weekend: return type == DayType::Weekend;
        case DayFilter::All: return true;
    }
    return true;
}

std::string_view to_string(StationClass c) {
    switch (c) {
        case StationClass::HighMeanHighVar: return "HighMeanHighVar";
        case StationClass::HighMeanLowVar: return "HighMeanLowVar";
        case StationClass::LowMeanHighVar: return "LowMeanHighVar";
        case StationClass::LowMeanLowVar: return "LowMeanLowVar";
    }
    return "LowMeanLowVar";
}

std::vector<StationStats> station_stats(const Dataset& dataset, DayFilter filter) {
    std::vector<std::size_t> days;
    for (std::size_t d = 0; d < dataset.n_dates(); ++d) {
        if (matches(filter, dataset.day_type(d))) days.push_back(d);
    }
    if (days.empty() || dataset.n_stations() == 0) {
        throw EmptySelection("stations", "station_stats",
                             "no " + std::string(to_string(filter)) + " dates in the dataset");
    }
    const int slots = dataset.slots_per_day();
    std::vector<StationStats> out;
    out.reserve(dataset.n_stations());
    std::vector<double> profile(static_cast<std::size_t>(slots));
    for (std::size_t s = 0; s < dataset.n_stations(); ++s) {
        std::fill(profile.begin(), profile.end(), 0.0);
        for (const auto d : days) {
            for (int k = 0; k < slots; ++k) {
                profile[static_cast<std::size_t>(k)] += static_cast<double>(dataset.flow(s, dataset.slice_position(d, k)));
            }
        }
        for (auto& p : profile) p /= static_cast<double>(days.size());
        const double mean = std::accumulate(profile.begin(), profile.end(), 0.0) / slots;
        double var = 0.0;
        for (const auto p : profile) var += (p - mean) * (p - mean);
        var /= slots;
        out.push_back(StationStats{dataset.stations()[s], mean, var});
    }
    return out;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("stations", "nearest_rank_quantile", "empty input");
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("stations", "nearest_rank_quantile", "q must lie in (0, 1)");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-12));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return values[rank - 1];
}

std::size_t natural_break(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    if (n < 2 || sorted.front() == sorted.back()) return n;
    // Prefix sums about the first value to keep the SSE terms well conditioned.
    const double origin = sorted.front();
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sorted[i] - origin;
        s1[i + 1] = s1[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }
    auto sse = [&](std::size_t a, std::size_t b) {
        const double cnt = static_cast<double>(b - a);
        const double sum = s1[b] - s1[a];
        return (s2[b] - s2[a]) - sum * sum / cnt;
    };
    std::size_t best = n;
    double best_cost = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        if (sorted[k - 1] == sorted[k]) continue;
        const double cost = sse(0, k) + sse(k, n);
        if (best == n || cost < best_cost) {
            best = k;
            best_cost = cost;
        }
    }
    return best;
}

namespace {

// Marks values High (true) or Low (false) under the configured cut.
std::vector<bool> high_flags(const std::vector<double>& values, ThresholdMode mode, double q) {
    std::vector<bool> high(values.size(), false);
    if (values.empty()) return high;
    double cut = 0.0;
    if (mode == ThresholdMode::Quantile) {
        cut = nearest_rank_quantile(values, q);
    } else {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const auto k = natural_break(sorted);
        if (k == sorted.size()) return high;
        cut = sorted[k - 1];  // largest Low value
    }
    for (std::size_t i = 0; i < values.size(); ++i) high[i] = values[i] > cut;
    return high;
}

}  // namespace

std::map<int, StationClass> classify_stations(const std::vector<StationStats>& stats,
                                              const ClassThresholds& thresholds) {
    constexpr const char* op = "classify_stations";
    if (stats.size() < 2) throw InvalidArgument("stations", op, "need at least two stations");
    if (thresholds.mode == ThresholdMode::Quantile &&
        !(thresholds.mean_quantile > 0.0 && thresholds.mean_quantile < 1.0 && thresholds.var_quantile > 0.0 &&
          thresholds.var_quantile < 1.0)) {
        throw InvalidArgument("stations", op, "quantiles must lie in (0, 1)");
    }

    const std::size_t n = stats.size();
    std::vector<double> means(n), vars(n);
    for (std::size_t i = 0; i < n; ++i) {
        means[i] = stats[i].mean_flow;
        vars[i] = stats[i].var_flow;
    }
    const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
    if (*lo == *hi) {
        throw DegenerateStats("stations", op, "all station means are identical; supply absolute cutoffs");
    }

    const auto high_mean = high_flags(means, thresholds.mode, thresholds.mean_quantile);

    std::map<int, StationClass> out;
    for (const bool group : {true, false}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (high_mean[i] == group) members.push_back(i);
        }
        if (members.empty()) continue;
        // Variance grows with the mean, so split on residuals of the group's own
        // least-squares line var = a + b * mean.
        const double m = static_cast<double>(members.size());
        double mx = 0.0, my = 0.0;
        for (const auto i : members) {
            mx += means[i];
            my += vars[i];
        }
        mx /= m;
        my /= m;
        double sxy = 0.0, sxx = 0.0;
        for (const auto i : members) {
            sxy += (means[i] - mx) * (vars[i] - my);
            sxx += (means[i] - mx) * (means[i] - mx);
        }
        const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
        std::vector<double> group_residuals;
        for (const auto i : members) group_residuals.push_back(vars[i] - (my + slope * (means[i] - mx)));
        const auto high_var = high_flags(group_residuals, thresholds.mode, thresholds.var_quantile);
        for (std::size_t k = 0; k < members.size(); ++k) {
            StationClass c;
            if (group) {
                c = high_var[k] ? StationClass::HighMeanHighVar : StationClass::HighMeanLowVar;
            } else {
                c = high_var[k] ? StationClass::LowMeanHighVar : StationClass::LowMeanLowVar;
            }
            out[stats[members[k]].station] = c;
        }
    }
    return out;
}

std::vector<double> centered_day(const Dataset& dataset, std::size_t station_pos, std::size_t date_pos) {
    const int slots = dataset.slots_per_day();
    std::vector<double> day(static_cast<std::size_t>(slots));
    double sum = 0.0;
    for (int k = 0; k < slots; ++k) {
        day[static_cast<std::size_t>(k)] = static_cast<double>(dataset.flow(station_pos, dataset.slice_position(date_pos, k)));
        sum += day[static_cast<std::size_t>(k)];
    }
    const double mean = sum / slots;
    for (auto& v : day) v -= mean;
    return day;
}

double center_flow(const Dataset& dataset, int station, const SliceIndex& slice) {
    const auto s = dataset.station_position(station);
    const auto d = dataset.date_position(slice.date);
    if (!s || !d || slice.slot < 0 || slice.slot >= dataset.slots_per_day()) {
        throw MissingKey("stations", "center_flow",
                         "no cell for station " + std::to_string(station) + " at " + slice.date.iso());
    }
    return centered_day(dataset, *s, *d)[static_cast<std::size_t>(slice.slot)];
}

}  // namespace metroflow::stations
