#include "metroflow/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metroflow/error.hpp"
#include "metroflow/rng.hpp"

namespace metroflow::synthetic {

namespace {

constexpr const char* kModule = "harness";
constexpr const char* kOp = "generate_synthetic";

bool finite(const WeatherEffects& e) {
    return std::isfinite(e.temperature) && std::isfinite(e.wind) && std::isfinite(e.humidity) &&
           std::isfinite(e.barometer);
}

double gauss(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z);
}

// Peak shape per slot, normalised to unit mean.
std::vector<double> shape(int slots, int slice_minutes, bool weekend) {
    std::vector<double> g(static_cast<std::size_t>(slots));
    for (int k = 0; k < slots; ++k) {
        const double h = (kServiceStartMinutes + (k + 0.5) * slice_minutes) / 60.0;
        g[static_cast<std::size_t>(k)] =
            weekend ? gauss(h, 14.0, 3.0) : gauss(h, 8.0, 0.75) + 0.9 * gauss(h, 18.25, 1.0);
    }
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / slots;
    for (auto& v : g) v /= mean;
    return g;
}

std::vector<double> walk(const WalkSpec& spec, std::size_t n, SplitMix64& rng) {
    std::vector<double> out(n);
    const double mid = 0.5 * (spec.lo + spec.hi);
    double x = mid;
    for (std::size_t t = 0; t < n; ++t) {
        x += spec.reversion * (mid - x) + spec.step_sd * rng.normal();
        if (x < spec.lo) x = spec.lo + (spec.lo - x);
        if (x > spec.hi) x = spec.hi - (x - spec.hi);
        x = std::clamp(x, spec.lo, spec.hi);
        out[t] = x;
    }
    return out;
}

void check_walk(const WalkSpec& w, const char* name) {
    if (!(w.lo < w.hi) || !(w.step_sd >= 0.0) || !(w.reversion >= 0.0 && w.reversion <= 1.0) ||
        !std::isfinite(w.lo) || !std::isfinite(w.hi)) {
        throw InvalidConfig(kModule, kOp, std::string("bad random-walk bounds for ") + name);
    }
}

}  // namespace

void validate(const SyntheticConfig& c) {
    if (c.n_stations < 2) throw InvalidConfig(kModule, kOp, "n_stations must be >= 2");
    if (c.n_days < 15) throw InvalidConfig(kModule, kOp, "n_days must be >= 15 (lag warm-up plus a split)");
    validate_slice_minutes(c.slice_minutes);
    if (std::accumulate(c.class_counts.begin(), c.class_counts.end(), 0) != c.n_stations ||
        std::any_of(c.class_counts.begin(), c.class_counts.end(), [](int v) { return v < 0; })) {
        throw InvalidConfig(kModule, kOp, "class_counts must be non-negative and sum to n_stations");
    }
    for (const auto& p : c.profiles) {
        if (!(p.level >= 0.0) || !(p.peak_share >= 0.0 && p.peak_share <= 1.0) || !std::isfinite(p.level)) {
            throw InvalidConfig(kModule, kOp, "class profile needs level >= 0 and peak_share in [0, 1]");
        }
    }
    if (!(c.station_jitter >= 0.0 && c.station_jitter < 1.0)) {
        throw InvalidConfig(kModule, kOp, "station_jitter must lie in [0, 1)");
    }
    if (!(c.weekend_scale > 0.0) || !std::isfinite(c.weekend_scale)) {
        throw InvalidConfig(kModule, kOp, "weekend_scale must be positive");
    }
    if (!(c.noise_scale >= 0.0) || !std::isfinite(c.noise_scale)) {
        throw InvalidConfig(kModule, kOp, "noise_scale must be non-negative");
    }
    if (!finite(c.workday_effects) || !finite(c.weekend_effects)) {
        throw InvalidConfig(kModule, kOp, "effect coefficients must be finite");
    }
    check_walk(c.temperature, "temperature");
    check_walk(c.wind, "wind");
    check_walk(c.humidity, "humidity");
    check_walk(c.barometer, "barometer");
    if (c.wind.lo < 0.0 || c.humidity.lo < 0.0 || c.humidity.hi > 100.0 || c.barometer.lo <= 0.0) {
        throw InvalidConfig(kModule, kOp, "weather bounds violate physical ranges");
    }
}

SyntheticData generate_synthetic(const SyntheticConfig& c) {
    validate(c);
    const int slots = slots_per_day(c.slice_minutes);
    const auto n_st = static_cast<std::size_t>(c.n_stations);
    const std::size_t n_slices = static_cast<std::size_t>(c.n_days) * static_cast<std::size_t>(slots);

    GroundTruth truth;
    truth.seed = c.seed;
    truth.workday_effects = c.workday_effects;
    truth.weekend_effects = c.weekend_effects;

    // Class assignment by seeded shuffle of station ids 1..n.
    std::vector<int> labels;
    for (std::size_t k = 0; k < 4; ++k) labels.insert(labels.end(), static_cast<std::size_t>(c.class_counts[k]), static_cast<int>(k));
    SplitMix64 class_rng(SplitMix64::derive(c.seed, 0));
    for (std::size_t i = labels.size() - 1; i > 0; --i) {
        std::swap(labels[i], labels[static_cast<std::size_t>(class_rng.below(i + 1))]);
    }
    SplitMix64 jitter_rng(SplitMix64::derive(c.seed, 1));
    std::vector<int> station_ids(n_st);
    std::vector<double> levels(n_st);
    for (std::size_t s = 0; s < n_st; ++s) {
        station_ids[s] = static_cast<int>(s) + 1;
        const auto cls = static_cast<stations::StationClass>(labels[s]);
        levels[s] = c.profiles[static_cast<std::size_t>(labels[s])].level *
                    jitter_rng.uniform(1.0 - c.station_jitter, 1.0 + c.station_jitter);
        truth.classes[station_ids[s]] = cls;
        truth.station_levels[station_ids[s]] = levels[s];
    }

    // Weather.
    SplitMix64 weather_rng(SplitMix64::derive(c.seed, 2));
    const std::array<std::vector<double>, 4> series{walk(c.temperature, n_slices, weather_rng),
                                                    walk(c.wind, n_slices, weather_rng),
                                                    walk(c.humidity, n_slices, weather_rng),
                                                    walk(c.barometer, n_slices, weather_rng)};
    std::array<std::vector<double>, 4> z;
    for (std::size_t v = 0; v < 4; ++v) {
        const double mean = std::accumulate(series[v].begin(), series[v].end(), 0.0) / static_cast<double>(n_slices);
        double var = 0.0;
        for (const double x : series[v]) var += (x - mean) * (x - mean);
        const double sd = std::sqrt(var / static_cast<double>(n_slices));
        truth.weather_mean[v] = mean;
        truth.weather_sd[v] = sd;
        z[v].resize(n_slices);
        for (std::size_t t = 0; t < n_slices; ++t) z[v][t] = sd > 0.0 ? (series[v][t] - mean) / sd : 0.0;
    }
    std::vector<SliceWeather> weather(n_slices);
    for (std::size_t t = 0; t < n_slices; ++t) {
        auto& w = weather[t];
        w.temperature = series[0][t];
        w.wind_speed = series[1][t];
        w.humidity = series[2][t];
        w.barometer = series[3][t];
        w.rain = c.rain_rule.derive(w.humidity, w.barometer, w.wind_speed);
    }

    // Flows.
    const auto work_shape = shape(slots, c.slice_minutes, false);
    const auto weekend_shape = shape(slots, c.slice_minutes, true);
    std::vector<DayType> day_types(static_cast<std::size_t>(c.n_days));
    for (int d = 0; d < c.n_days; ++d) day_types[static_cast<std::size_t>(d)] = day_type(c.start_date.plus_days(d), c.calendar);

    SplitMix64 noise_rng(SplitMix64::derive(c.seed, 3));
    std::vector<std::int64_t> flow(n_st * n_slices);
    for (std::size_t s = 0; s < n_st; ++s) {
        const auto& profile = c.profiles[static_cast<std::size_t>(labels[s])];
        for (std::size_t t = 0; t < n_slices; ++t) {
            const std::size_t d = t / static_cast<std::size_t>(slots);
            const std::size_t k = t % static_cast<std::size_t>(slots);
            const bool weekend = day_types[d] == DayType::Weekend;
            const auto& g = weekend ? weekend_shape : work_shape;
            const auto& fx = weekend ? c.weekend_effects : c.workday_effects;
            double v = levels[s] * (weekend ? c.weekend_scale : 1.0) *
                       ((1.0 - profile.peak_share) + profile.peak_share * g[k]);
            v += fx.temperature * z[0][t] + fx.wind * z[1][t] + fx.humidity * z[2][t] + fx.barometer * z[3][t];
            v += c.noise_scale * noise_rng.normal();
            flow[s * n_slices + t] = std::llround(std::max(v, 0.0));
        }
    }

    Dataset dataset(c.slice_minutes, std::move(station_ids), c.start_date, c.n_days, std::move(flow),
                    std::move(weather), c.calendar);
    return SyntheticData{std::move(dataset), std::move(truth)};
}

SyntheticConfig config_from_json(const nlohmann::json& j, SyntheticConfig c) {
    auto num = [&](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).get<std::remove_reference_t<decltype(target)>>();
    };
    num("n_stations", c.n_stations);
    num("n_days", c.n_days);
    num("slice_minutes", c.slice_minutes);
    num("station_jitter", c.station_jitter);
    num("weekend_scale", c.weekend_scale);
    num("noise_scale", c.noise_scale);
    num("seed", c.seed);
    if (j.contains("start_date")) c.start_date = Date::parse(j.at("start_date").get<std::string>());
    if (j.contains("class_counts")) c.class_counts = j.at("class_counts").get<std::array<int, 4>>();
    if (j.contains("class_levels")) {
        const auto v = j.at("class_levels").get<std::array<double, 4>>();
        for (std::size_t k = 0; k < 4; ++k) c.profiles[k].level = v[k];
    }
    if (j.contains("class_peak_shares")) {
        const auto v = j.at("class_peak_shares").get<std::array<double, 4>>();
        for (std::size_t k = 0; k < 4; ++k) c.profiles[k].peak_share = v[k];
    }
    num("effect_workday_temperature", c.workday_effects.temperature);
    num("effect_workday_wind", c.workday_effects.wind);
    num("effect_workday_humidity", c.workday_effects.humidity);
    num("effect_workday_barometer", c.workday_effects.barometer);
    num("effect_weekend_temperature", c.weekend_effects.temperature);
    num("effect_weekend_wind", c.weekend_effects.wind);
    num("effect_weekend_humidity", c.weekend_effects.humidity);
    num("effect_weekend_barometer", c.weekend_effects.barometer);
    if (j.contains("holidays")) {
        std::set<Date> dates;
        for (const auto& h : j.at("holidays")) dates.insert(Date::parse(h.get<std::string>()));
        c.calendar = HolidayCalendar{std::move(dates)};
    }
    return c;
}

nlohmann::json to_json(const GroundTruth& t) {
    nlohmann::ordered_json j;
    j["seed"] = t.seed;
    nlohmann::ordered_json classes, levels;
    for (const auto& [id, cls] : t.classes) classes[std::to_string(id)] = std::string(stations::to_string(cls));
    for (const auto& [id, lvl] : t.station_levels) levels[std::to_string(id)] = lvl;
    j["classes"] = classes;
    j["station_levels"] = levels;
    auto effects = [](const WeatherEffects& e) {
        return nlohmann::ordered_json{{"temperature", e.temperature},
                                      {"wind", e.wind},
                                      {"humidity", e.humidity},
                                      {"barometer", e.barometer}};
    };
    j["workday_effects"] = effects(t.workday_effects);
    j["weekend_effects"] = effects(t.weekend_effects);
    j["weather_mean"] = t.weather_mean;
    j["weather_sd"] = t.weather_sd;
    return j;
}

}  // namespace metroflow::synthetic
