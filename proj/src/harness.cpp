#include "metroflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "metroflow/error.hpp"
#include "metroflow/text.hpp"

namespace metroflow::harness {

using features::DesignMatrix;
using features::FeatureMask;

std::vector<FeatureMask> enumerate_masks() {
    std::vector<FeatureMask> out;
    for (unsigned i = 0; i < 16; ++i) out.push_back(FeatureMask::from_index(i));
    return out;
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Tree: return "tree";
        case ModelKind::Bagging: return "bagging";
        case ModelKind::Forest: return "forest";
        case ModelKind::Mlp: return "mlp";
    }
    return "bagging";
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "tree") return ModelKind::Tree;
    if (text == "bagging") return ModelKind::Bagging;
    if (text == "forest") return ModelKind::Forest;
    if (text == "mlp") return ModelKind::Mlp;
    throw InvalidArgument("harness", "parse_model_kind", "unknown model '" + text + "'");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) task(i);
        });
    }
    for (auto& t : pool) t.join();
}

namespace {

models::MatrixView view(const DesignMatrix& m) { return {m.values, m.rows(), m.cols()}; }

}  // namespace

FitResult fit_and_score(const DesignMatrix& train, const DesignMatrix& test, const ModelSpec& spec, int jobs) {
    if (train.rows() == 0 || test.rows() == 0) {
        throw DegenerateSplit("harness", "fit_and_score", "empty train or test set");
    }
    FitResult result;
    if (spec.kind == ModelKind::Mlp) {
        std::vector<std::size_t> all(train.cols());
        std::iota(all.begin(), all.end(), std::size_t{0});
        auto scaler = features::fit_scaler(train, all);
        // Constant columns are only centered; raw magnitudes like 1010 hPa stall training.
        for (auto& c : scaler.columns) {
            if (!c.zero_variance) continue;
            c.zero_variance = false;
            c.stddev = 1.0;
        }
        const auto tr = features::apply_scaler(scaler, train);
        const auto te = features::apply_scaler(scaler, test);
        const double n = static_cast<double>(tr.rows());
        const double mean = std::accumulate(tr.targets.begin(), tr.targets.end(), 0.0) / n;
        double var = 0.0;
        for (const double v : tr.targets) var += (v - mean) * (v - mean);
        const double sd = var > 0.0 ? std::sqrt(var / n) : 1.0;
        std::vector<double> y(tr.targets.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (tr.targets[i] - mean) / sd;
        auto net = models::fit_mlp(view(tr), y, spec.mlp);
        result.predictions = net.predict(view(te));
        for (auto& p : result.predictions) p = p * sd + mean;
        result.model = std::move(net);
    } else {
        const auto scaler = features::fit_scaler(train, features::weather_columns(train));
        const auto tr = features::apply_scaler(scaler, train);
        const auto te = features::apply_scaler(scaler, test);
        switch (spec.kind) {
            case ModelKind::Tree: result.model = models::fit_tree(view(tr), tr.targets, spec.tree); break;
            case ModelKind::Bagging:
                result.model = models::fit_bagging(view(tr), tr.targets, spec.tree, spec.ensemble, jobs);
                break;
            default: result.model = models::fit_forest(view(tr), tr.targets, spec.tree, spec.ensemble, jobs); break;
        }
        result.predictions = models::predict(result.model, view(te));
    }
    result.metrics = stats::metrics(test.targets, result.predictions);
    return result;
}

std::map<int, stations::StationClass> classify_dataset(const Dataset& dataset,
                                                       const stations::ClassThresholds& thresholds) {
    return stations::classify_stations(stations::station_stats(dataset, stations::DayFilter::All), thresholds);
}

namespace {

// One model per station; metrics pooled over every station's test rows.
stats::Metrics score_per_station(const DesignMatrix& train, const DesignMatrix& test, const ModelSpec& spec) {
    std::set<int> ids;
    for (const auto& k : test.keys) ids.insert(k.station);
    std::vector<double> y, y_hat;
    for (const int id : ids) {
        std::vector<std::size_t> tr_rows, te_rows;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            if (train.keys[i].station == id) tr_rows.push_back(i);
        }
        for (std::size_t i = 0; i < test.rows(); ++i) {
            if (test.keys[i].station == id) te_rows.push_back(i);
        }
        const auto tr = train.select_rows(tr_rows);
        const auto te = test.select_rows(te_rows);
        const auto fit = fit_and_score(tr, te, spec);
        y.insert(y.end(), te.targets.begin(), te.targets.end());
        y_hat.insert(y_hat.end(), fit.predictions.begin(), fit.predictions.end());
    }
    return stats::metrics(y, y_hat);
}

}  // namespace

std::vector<AblationReport> run_ablation(const Dataset& dataset, const ScenarioTemplate& scenario,
                                         const features::SplitSpec& split,
                                         const std::vector<stations::DayFilter>& filters, int jobs) {
    const auto classes = classify_dataset(dataset, scenario.thresholds);
    const auto masks = enumerate_masks();
    const std::size_t n_masks = masks.size();

    std::vector<AblationRow> rows(filters.size() * n_masks);
    std::vector<std::size_t> dropped(filters.size(), 0);
    parallel_for(rows.size(), jobs, [&](std::size_t job) {
        const std::size_t f = job / n_masks;
        auto& row = rows[job];
        row.mask = masks[job % n_masks];
        try {
            features::AssembleOptions opts;
            opts.day_filter = filters[f];
            opts.stations = scenario.stations;
            const auto assembled = features::assemble(dataset, classes, row.mask, opts);
            if (job % n_masks == 0) dropped[f] = assembled.dropped_insufficient_history;
            const auto [train, test] = features::split(assembled.matrix, split);
            row.n_train = train.rows();
            row.n_test = test.rows();
            row.metrics = scenario.per_station ? score_per_station(train, test, scenario.model)
                                               : fit_and_score(train, test, scenario.model).metrics;
            if (!std::isfinite(row.metrics.mse)) row.error = "non-finite metrics";
        } catch (const std::exception& e) {
            row.error = std::string("mask ") + row.mask.label() + ": " + e.what();
        }
    });

    std::vector<AblationReport> reports;
    for (std::size_t f = 0; f < filters.size(); ++f) {
        AblationReport report;
        report.day_filter = filters[f];
        report.seed = scenario.model.kind == ModelKind::Mlp ? scenario.model.mlp.seed : scenario.model.ensemble.seed;
        report.split = split;
        report.model = scenario.model;
        report.dropped_insufficient_history = dropped[f];
        report.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(f * n_masks),
                           rows.begin() + static_cast<std::ptrdiff_t>((f + 1) * n_masks));
        std::stable_sort(report.rows.begin(), report.rows.end(), [](const AblationRow& a, const AblationRow& b) {
            const bool ea = !a.error.empty(), eb = !b.error.empty();
            if (ea != eb) return eb;
            if (ea) return false;
            return a.metrics.mse < b.metrics.mse;
        });
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<BakeoffRow> run_bakeoff(const Dataset& dataset, const std::vector<int>& station_subset,
                                    const features::SplitSpec& split, const BakeoffOptions& options, int jobs) {
    const auto classes = classify_dataset(dataset, options.thresholds);
    const std::string scope =
        station_subset.empty() ? "all stations" : "selected " + std::to_string(station_subset.size()) + " stations";

    auto spec_for = [&](ModelKind kind) {
        ModelSpec spec;
        spec.kind = kind;
        spec.tree = options.tree;
        spec.ensemble = options.ensemble;
        spec.mlp = options.mlp;
        return spec;
    };
    auto run = [&](const std::string& name, ModelKind kind, stations::DayFilter filter) {
        BakeoffRow row{scope, name, {}, "ok"};
        try {
            features::AssembleOptions opts;
            opts.day_filter = filter;
            opts.stations = station_subset;
            const auto assembled = features::assemble(dataset, classes, options.mask, opts);
            const auto [train, test] = features::split(assembled.matrix, split);
            row.metrics = fit_and_score(train, test, spec_for(kind), jobs).metrics;
        } catch (const NonFiniteLoss& e) {
            row.status = std::string("diverged: ") + e.what();
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
        if (row.status != "ok") {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.metrics = stats::Metrics{nan, nan, nan, nan, false};
        }
        return row;
    };

    std::vector<BakeoffRow> rows;
    rows.push_back(run("bagging", ModelKind::Bagging, stations::DayFilter::All));
    rows.push_back(run("forest", ModelKind::Forest, stations::DayFilter::All));
    rows.push_back(run("mlp", ModelKind::Mlp, stations::DayFilter::All));
    if (options.day_type_rows) {
        rows.push_back(run("forest (workday)", ModelKind::Forest, stations::DayFilter::Workday));
        rows.push_back(run("forest (weekend)", ModelKind::Forest, stations::DayFilter::Weekend));
    }
    return rows;
}

std::vector<RegressionRow> run_regression_study(const Dataset& dataset, const std::vector<int>& station_ids,
                                                int slot, DayType day_type) {
    if (slot < 0 || slot >= dataset.slots_per_day()) {
        throw InvalidArgument("harness", "run_regression_study", "slot outside the service day");
    }
    std::vector<std::size_t> days;
    for (std::size_t d = 0; d < dataset.n_dates(); ++d) {
        if (dataset.day_type(d) == day_type) days.push_back(d);
    }

    // Regressor columns over the selected days; constant ones are dropped.
    const char* names[4] = {"humidity", "temperature", "barometer", "rain"};
    std::array<std::vector<double>, 4> cols;
    for (const auto d : days) {
        const auto& w = dataset.weather(dataset.slice_position(d, slot));
        cols[0].push_back(w.humidity);
        cols[1].push_back(w.temperature);
        cols[2].push_back(w.barometer);
        cols[3].push_back(static_cast<double>(static_cast<int>(w.rain)));
    }
    std::vector<std::string> used;
    std::vector<std::string> dropped;
    std::vector<std::vector<double>> regressors;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& v = cols[c];
        const bool constant = v.empty() || std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
        if (constant) {
            dropped.emplace_back(names[c]);
            continue;
        }
        std::vector<double> out = v;
        if (c < 3) {
            const double n = static_cast<double>(v.size());
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
            double var = 0.0;
            for (const double x : v) var += (x - mean) * (x - mean);
            const double sd = std::sqrt(var / n);
            for (auto& x : out) x = (x - mean) / sd;
        }
        used.emplace_back(names[c]);
        regressors.push_back(std::move(out));
    }
    std::vector<double> X(days.size() * regressors.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        for (std::size_t j = 0; j < regressors.size(); ++j) X[i * regressors.size() + j] = regressors[j][i];
    }
    const models::MatrixView view(X, days.size(), regressors.size());

    std::string dropped_note;
    for (const auto& d : dropped) dropped_note += (dropped_note.empty() ? "" : ",") + d;
    const std::string label = std::string(metroflow::to_string(day_type)) + " " +
                              slot_start(slot, dataset.slice_minutes()).str();

    std::vector<RegressionRow> out;
    for (const int id : station_ids) {
        RegressionRow row;
        row.station = id;
        row.slice_label = label;
        row.regressors = used;
        const auto s = dataset.station_position(id);
        if (!s) {
            row.status = "missing station";
            out.push_back(std::move(row));
            continue;
        }
        std::vector<double> y;
        for (const auto d : days) y.push_back(stations::centered_day(dataset, *s, d)[static_cast<std::size_t>(slot)]);
        try {
            row.fit = stats::ols_fit(view, y);
            row.status = dropped_note.empty() ? "ok" : "ok; dropped constant " + dropped_note;
        } catch (const TooFewObservations&) {
            row.status = "too few observations";
        } catch (const RankDeficient& e) {
            row.status = std::string("rank deficient: ") + e.what();
        }
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::string num(double v) { return text::format(v); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

std::string ablation_csv(const AblationReport& report) {
    std::ostringstream out;
    out << "rank,mask,temperature,wind,humidity,barometer,mae,mse,rmse,r2,n_train,n_test,status\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        const auto& m = r.metrics;
        const bool ok = r.error.empty();
        out << i + 1 << ',' << r.mask.label() << ',' << r.mask.temperature << ',' << r.mask.wind << ','
            << r.mask.humidity << ',' << r.mask.barometer << ',' << (ok ? num(m.mae) : "nan") << ','
            << (ok ? num(m.mse) : "nan") << ',' << (ok ? num(m.rmse) : "nan") << ',' << (ok ? num(m.r2) : "nan")
            << ',' << r.n_train << ',' << r.n_test << ',' << (ok ? "ok" : csv_field(r.error)) << '\n';
    }
    return out.str();
}

std::string bakeoff_csv(const std::vector<BakeoffRow>& rows) {
    std::ostringstream out;
    out << "scope,model,mse,rmse,mae,score,status\n";
    for (const auto& r : rows) {
        out << csv_field(r.scope) << ',' << csv_field(r.model) << ',' << num(r.metrics.mse) << ','
            << num(r.metrics.rmse) << ',' << num(r.metrics.mae) << ',' << num(r.metrics.r2) << ','
            << csv_field(r.status) << '\n';
    }
    return out.str();
}

std::string regression_csv(const std::vector<RegressionRow>& rows) {
    std::ostringstream out;
    out << "slice,station,r,r_square,adj_r_square,rmse,durbin_watson,n,p,status\n";
    for (const auto& r : rows) {
        const bool ok = r.status.rfind("ok", 0) == 0;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out << csv_field(r.slice_label) << ',' << r.station << ',' << num(ok ? r.fit.r : nan) << ','
            << num(ok ? r.fit.r2 : nan) << ',' << num(ok ? r.fit.adj_r2 : nan) << ',' << num(ok ? r.fit.rmse : nan)
            << ',' << num(ok ? r.fit.dw : nan) << ',' << r.fit.n << ',' << r.fit.p << ',' << csv_field(r.status)
            << '\n';
    }
    return out.str();
}

std::string correlation_csv(const std::vector<stats::CorrelationRow>& rows) {
    std::ostringstream out;
    out << "variable,total,workdays,weekends,flag\n";
    for (const auto& r : rows) {
        out << r.variable << ',' << num(r.total) << ',' << num(r.workdays) << ',' << num(r.weekends) << ','
            << r.flag << '\n';
    }
    return out.str();
}

}  // namespace metroflow::harness
