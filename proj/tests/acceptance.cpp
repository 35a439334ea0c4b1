// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "metroflow/cli.hpp"
#include "metroflow/error.hpp"
#include "metroflow/harness.hpp"
#include "metroflow/models.hpp"
#include "metroflow/stats.hpp"
#include "metroflow/synthetic.hpp"
#include "support.hpp"

using namespace metroflow;
using harness::ModelKind;
using harness::ModelSpec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- 1: OLS against the normal equations ----

Outcome ols_oracle() {
    const auto t0 = Clock::now();
    std::mt19937 gen(101);
    std::normal_distribution<double> nd(0, 1);
    double worst_coef = 0, worst_orth = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 50, p = 2 + static_cast<std::size_t>(trial % 3);
        std::vector<double> X(n * p), y(n);
        for (auto& v : X) v = nd(gen) * 3.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = nd(gen) * 2.0 + 4.0;
            for (std::size_t j = 0; j < p; ++j) y[i] += (0.5 * j - 1.0) * X[i * p + j];
        }
        const auto fit = stats::ols_fit({X, n, p}, y);
        const auto oracle = testing::normal_equation_ols(X, n, p, y);
        for (std::size_t j = 0; j <= p; ++j) worst_coef = std::max(worst_coef, std::abs(fit.coefficients[j] - oracle[j]));
        double ynorm = 0;
        for (const double v : y) ynorm += v * v;
        ynorm = std::sqrt(ynorm);
        for (std::size_t j = 0; j <= p; ++j) {
            double dot = 0;
            for (std::size_t i = 0; i < n; ++i) dot += (j == 0 ? 1.0 : X[i * p + j - 1]) * fit.residuals[i];
            worst_orth = std::max(worst_orth, std::abs(dot) / ynorm);
        }
    }
    const double secs = seconds_since(t0);
    return {worst_coef < 1e-8 && worst_orth < 1e-8 && secs < 5.0,
            "max |coef diff| " + fmt("%.2e", worst_coef) + ", max |X'r|/|y| " + fmt("%.2e", worst_orth) + ", " +
                fmt("%.2f", secs) + " s"};
}

// ---- 2: metrics and pearson against hand formulas ----

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome metrics_oracle() {
    std::mt19937 gen(202);
    std::normal_distribution<double> nd(0, 1);
    std::uniform_int_distribution<int> len(2, 300);
    double worst = 0;
    bool in_range = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(len(gen));
        const double scale = std::pow(10.0, trial % 7 - 3);
        std::vector<double> y(n), p(n);
        for (auto& v : y) v = nd(gen) * scale + 50.0 * scale;
        // Every fifth pair is nearly collinear to stress the [-1, 1] clamp.
        for (std::size_t i = 0; i < n; ++i) p[i] = trial % 5 == 0 ? y[i] * 3.0 + 1e-9 * nd(gen) : nd(gen) * scale;

        long double ae = 0, se = 0, my = 0, mp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const long double e = static_cast<long double>(y[i]) - p[i];
            ae += std::abs(e);
            se += e * e;
            my += y[i];
            mp += p[i];
        }
        my /= n;
        mp /= n;
        long double st = 0, sxy = 0, spp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            st += (y[i] - my) * (y[i] - my);
            sxy += (y[i] - my) * (p[i] - mp);
            spp += (p[i] - mp) * (p[i] - mp);
        }
        const auto m = stats::metrics(y, p);
        const double mae = static_cast<double>(ae / n), mse = static_cast<double>(se / n);
        worst = std::max({worst, rel(m.mae, mae), rel(m.mse, mse), rel(m.rmse, std::sqrt(mse)),
                          rel(m.r2, static_cast<double>(1.0L - se / st))});
        const double r = stats::pearson(y, p);
        const double hand = static_cast<double>(sxy / std::sqrt(st * spp));
        worst = std::max(worst, rel(r, std::clamp(hand, -1.0, 1.0)));
        in_range = in_range && r >= -1.0 && r <= 1.0;
    }
    return {worst < 1e-12 && in_range, "max relative error " + fmt("%.2e", worst) + (in_range ? "" : ", r outside [-1, 1]")};
}

// ---- 3: tree interpolation and the four-point split ----

Outcome tree_correctness() {
    std::mt19937 gen(303);
    std::uniform_int_distribution<int> len(2, 64), width(1, 6), small(0, 9);
    std::normal_distribution<double> nd(0, 10);
    int failures = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = static_cast<std::size_t>(len(gen)), d = static_cast<std::size_t>(width(gen));
        std::set<std::vector<double>> seen;
        std::vector<double> X, y;
        while (seen.size() < n) {
            std::vector<double> row(d);
            for (auto& v : row) v = small(gen) + (d == 1 ? 10.0 * static_cast<double>(seen.size()) : 0.0);
            if (!seen.insert(row).second) continue;
            X.insert(X.end(), row.begin(), row.end());
            y.push_back(nd(gen));
        }
        const auto tree = models::fit_tree({X, n, d}, y);
        if (stats::metrics(y, tree.predict({X, n, d})).mse != 0.0) ++failures;
    }
    const std::vector<double> X{0, 1, 2, 3}, y{0, 0, 10, 10};
    const auto t = models::fit_tree({X, 4, 1}, y);
    bool example = t.nodes().size() == 3;
    if (example) {
        const auto& root = t.nodes()[0];
        example = root.threshold == 1.5 && t.nodes()[static_cast<std::size_t>(root.left)].value == 0.0 &&
                  t.nodes()[static_cast<std::size_t>(root.right)].value == 10.0;
    }
    return {failures == 0 && example, std::to_string(200 - failures) + "/200 instances interpolated; four-point example " +
                                          (example ? "threshold 1.5, leaves {0, 10}" : "wrong")};
}

// ---- 4: bagging beats a single tree ----

Outcome variance_reduction() {
    const auto t0 = Clock::now();
    double tree_mse = 0, bag_mse = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        synthetic::SyntheticConfig c;
        c.n_stations = 20;
        c.n_days = 30;
        c.class_counts = {1, 1, 1, 17};
        c.noise_scale = 100.0;
        c.calendar = {};
        c.seed = seed;
        const auto data = synthetic::generate_synthetic(c);
        const auto classes = harness::classify_dataset(data.dataset, {});
        const auto m = features::assemble(data.dataset, classes, features::FeatureMask::all()).matrix;
        const auto [train, test] = features::split(m, {0.7, features::SplitMode::Chronological, 0});
        ModelSpec tree;
        tree.kind = ModelKind::Tree;
        ModelSpec bag;
        bag.kind = ModelKind::Bagging;
        bag.ensemble.n_estimators = 50;
        bag.ensemble.seed = seed;
        tree_mse += harness::fit_and_score(train, test, tree).metrics.mse / 20.0;
        bag_mse += harness::fit_and_score(train, test, bag, jobs()).metrics.mse / 20.0;
    }
    const double secs = seconds_since(t0);
    return {bag_mse < tree_mse && secs < 60.0, "mean MSE bagging " + fmt("%.1f", bag_mse) + " vs tree " +
                                                   fmt("%.1f", tree_mse) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- 5: MLP gradient ----

Outcome gradient_check() {
    std::mt19937 gen(505);
    std::uniform_int_distribution<int> width(1, 6), rows(3, 12), depth(1, 3);
    std::normal_distribution<double> nd(0, 1);
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t d = static_cast<std::size_t>(width(gen)), n = static_cast<std::size_t>(rows(gen));
        models::MlpParams mp;
        mp.hidden_layers.clear();
        for (int l = depth(gen); l > 0; --l) mp.hidden_layers.push_back(width(gen));
        mp.seed = seed;
        models::Mlp net(d, mp);
        auto theta = net.parameters();
        // Move off the zero-bias start so no pre-activation sits on the ReLU kink.
        for (auto& t : theta) t += 0.1 * nd(gen);
        net.set_parameters(theta);
        std::vector<double> X(n * d), y(n), grad;
        for (auto& v : X) v = nd(gen);
        for (auto& v : y) v = nd(gen);
        net.loss_and_gradient({X, n, d}, y, grad);
        double num = 0, den = 0;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double h = 1e-6, orig = theta[k];
            theta[k] = orig + h;
            net.set_parameters(theta);
            const double up = net.loss({X, n, d}, y);
            theta[k] = orig - h;
            net.set_parameters(theta);
            const double down = net.loss({X, n, d}, y);
            theta[k] = orig;
            const double fd = (up - down) / (2 * h);
            num += (fd - grad[k]) * (fd - grad[k]);
            den += fd * fd + grad[k] * grad[k];
        }
        worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    }
    return {worst < 1e-4, "max relative gradient error " + fmt("%.2e", worst) + " over 20 networks"};
}

// ---- 6: Durbin-Watson ----

Outcome durbin_watson_properties() {
    std::mt19937 gen(606);
    std::normal_distribution<double> nd(0, 1);
    std::uniform_int_distribution<int> len(2, 200);
    bool bounded = true;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> r(static_cast<std::size_t>(len(gen)));
        for (std::size_t i = 0; i < r.size(); ++i) {
            switch (trial % 3) {
                case 0: r[i] = nd(gen); break;
                case 1: r[i] = (i % 2 ? 1.0 : -1.0) * std::exp(nd(gen)); break;
                default: r[i] = (i > 0 ? r[i - 1] : 0.0) + nd(gen); break;
            }
        }
        const double dw = stats::durbin_watson(r);
        bounded = bounded && dw >= 0.0 && dw <= 4.0;
    }
    const bool constant = stats::durbin_watson(std::vector<double>(50, 2.5)) == 0.0;
    double worst = 0;
    for (unsigned seed = 0; seed < 10; ++seed) {
        std::mt19937 g(seed);
        std::vector<double> r(10000);
        for (auto& v : r) v = nd(g);
        worst = std::max(worst, std::abs(stats::durbin_watson(r) - 2.0));
    }
    return {bounded && constant && worst < 0.1, std::string(bounded ? "bounded" : "OUT OF [0, 4]") + "; constant -> " +
                                                    (constant ? "0" : "nonzero") + "; iid max |dw - 2| " +
                                                    fmt("%.4f", worst)};
}

// ---- 7 and 8: ablation on the full-size synthetic network ----

ModelSpec ablation_model(std::uint64_t seed) {
    ModelSpec m;
    m.kind = ModelKind::Bagging;
    m.ensemble.n_estimators = 10;
    m.ensemble.bootstrap_size = 0.5;
    m.ensemble.seed = seed;
    m.tree.min_samples_leaf = 5;
    return m;
}

synthetic::SyntheticConfig full_size(std::uint64_t seed) {
    synthetic::SyntheticConfig c;  // 100 stations x 90 days x hourly slices
    c.calendar = {};
    c.seed = seed;
    return c;
}

const features::SplitSpec kSplit{0.7, features::SplitMode::Chronological, 0};

bool top3_has_barometer(const harness::AblationReport& r) {
    int hits = 0;
    for (std::size_t i = 0; i < 3 && i < r.rows.size(); ++i) hits += r.rows[i].mask.barometer;
    return hits >= 2;
}

double improvement(const Dataset& ds, const std::map<int, stations::StationClass>& classes, stations::DayFilter f,
                   std::uint64_t seed) {
    double mse[2];
    const features::FeatureMask masks[2]{features::FeatureMask::none(), features::FeatureMask::all()};
    for (int k = 0; k < 2; ++k) {
        const auto m = features::assemble(ds, classes, masks[k], {f, {}}).matrix;
        const auto [train, test] = features::split(m, kSplit);
        mse[k] = harness::fit_and_score(train, test, ablation_model(seed), jobs()).metrics.mse;
    }
    return mse[0] - mse[1];
}

Outcome effect_recovery() {
    const auto t0 = Clock::now();
    int corr_ok = 0, top_ok = 0, weekend_ok = 0;
    std::string notes;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // Both day types: barometer effect 60 against noise 20.
        auto cfg = full_size(seed);
        cfg.workday_effects.barometer = 60.0;
        cfg.weekend_effects.barometer = 60.0;
        const auto data = synthetic::generate_synthetic(cfg);
        const auto classes = harness::classify_dataset(data.dataset, {});
        const auto matrix = features::assemble(data.dataset, classes, features::FeatureMask::all()).matrix;
        std::string best;
        double best_r = -1;
        for (const auto& row : stats::correlation_table(matrix)) {
            if (row.variable != "temperature" && row.variable != "wind" && row.variable != "humidity" &&
                row.variable != "barometer") {
                continue;
            }
            if (std::abs(row.total) > best_r) {
                best_r = std::abs(row.total);
                best = row.variable;
            }
        }
        corr_ok += best == "barometer";
        harness::ScenarioTemplate scenario;
        scenario.model = ablation_model(seed);
        const auto reports = harness::run_ablation(data.dataset, scenario, kSplit,
                                                   {stations::DayFilter::Workday, stations::DayFilter::Weekend}, jobs());
        top_ok += top3_has_barometer(reports[0]) && top3_has_barometer(reports[1]);

        // Weekend-only effect.
        auto wk = full_size(seed);
        wk.weekend_effects.barometer = 60.0;
        const auto wdata = synthetic::generate_synthetic(wk);
        const auto wclasses = harness::classify_dataset(wdata.dataset, {});
        const double gain_weekend = improvement(wdata.dataset, wclasses, stations::DayFilter::Weekend, seed);
        const double gain_workday = improvement(wdata.dataset, wclasses, stations::DayFilter::Workday, seed);
        weekend_ok += gain_weekend > gain_workday;
        if (seed == 0) {
            notes = "; seed 0: top |r| " + best + " " + fmt("%.3f", best_r) + ", weekend gain " +
                    fmt("%.0f", gain_weekend) + " vs workday " + fmt("%.0f", gain_workday);
        }
    }
    const double secs = seconds_since(t0);
    return {corr_ok >= 9 && top_ok >= 9 && weekend_ok >= 9 && secs < 300.0,
            "barometer top |r| " + std::to_string(corr_ok) + "/10, top-3 rows " + std::to_string(top_ok) +
                "/10, weekend gain > workday gain " + std::to_string(weekend_ok) + "/10, " + fmt("%.0f", secs) + " s" +
                notes};
}

Outcome null_control() {
    const auto t0 = Clock::now();
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = synthetic::generate_synthetic(full_size(seed));
        harness::ScenarioTemplate scenario;
        scenario.model = ablation_model(seed);
        for (const auto& r : harness::run_ablation(data.dataset, scenario, kSplit,
                                                   {stations::DayFilter::Workday, stations::DayFilter::Weekend}, jobs())) {
            double lo = INFINITY, hi = 0;
            for (const auto& row : r.rows) {
                if (!row.error.empty()) return {false, "mask " + row.mask.label() + " failed: " + row.error};
                lo = std::min(lo, row.metrics.mse);
                hi = std::max(hi, row.metrics.mse);
            }
            worst = std::max(worst, hi / lo);
        }
    }
    return {worst < 1.05, "worst max/min MSE ratio " + fmt("%.4f", worst) + " over 10 seeds x 2 day types, " +
                              fmt("%.0f", seconds_since(t0)) + " s"};
}

// ---- 9: classification ----

Outcome classification_recovery() {
    int worst = 100;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        synthetic::SyntheticConfig c;  // 6 HH, 5 HL, 2 LH, 87 LL
        c.seed = seed;
        const auto data = synthetic::generate_synthetic(c);
        const auto labels = harness::classify_dataset(data.dataset, {});
        int correct = 0;
        for (const auto& [id, cls] : data.truth.classes) correct += labels.at(id) == cls;
        worst = std::min(worst, correct);
    }
    return {worst >= 95, "worst accuracy " + std::to_string(worst) + "% over 10 seeds"};
}

// ---- 10: determinism and formats through the command line ----

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::dispatch(args, out, err);
}

std::vector<std::string> body_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    }
    return lines;
}

Outcome determinism_and_format() {
    const auto root = testing::scratch("acceptance_cli");
    std::ofstream(root / "gen.json") << R"({"n_stations": 16, "n_days": 28, "class_counts": [2,2,2,10], "holidays": []})";
    {
        std::ofstream f(root / "raw_flows.csv");
        f << "date,origin,outbound,time,count\n";
        std::ofstream w(root / "raw_weather.csv");
        w << "date,time,temperature,wind,humidity,barometer\n";
        for (int d = 1; d <= 9; ++d) {
            for (int h = 6; h < 23; ++h) {
                w << "2018-04-0" << d << ',' << h << ":00," << 20 + d << ",10," << 60 + h << ",1010\n";
                f << "2018-04-0" << d << ",7,1," << h << ":05," << 10 * h + d << '\n';
            }
        }
    }
    std::vector<std::string> problems;
    const std::vector<std::string> quick{"--n-estimators", "3", "--min-samples-leaf", "5", "--epochs", "3",
                                         "--hidden-layers", "4"};
    for (const char* run : {"a", "b"}) {
        const auto dir = root / run;
        const auto data = (dir / "synth").string();
        auto add = [&](std::vector<std::string> args, bool model = false) {
            if (model) args.insert(args.end(), quick.begin(), quick.end());
            if (cli(args) != 0) problems.push_back("'" + args[0] + "' failed");
        };
        add({"synth", "--config", (root / "gen.json").string(), "--seed", "5", "--out", data});
        add({"ingest", "--flows", (root / "raw_flows.csv").string(), "--weather", (root / "raw_weather.csv").string(),
             "--out", (dir / "ingest").string()});
        add({"classify", "--data", data, "--out", (dir / "classify").string()});
        add({"assemble", "--data", data, "--out", (dir / "assemble").string()});
        add({"train", "--data", data, "--out", (dir / "train").string(), "--model", "mlp"}, true);
        add({"bakeoff", "--data", data, "--out", (dir / "bakeoff").string(), "--day-type-rows"}, true);
        add({"ablate", "--data", data, "--out", (dir / "ablate").string(), "--jobs", std::string(run) == "a" ? "1" : "4"},
            true);
        add({"regress", "--data", data, "--out", (dir / "regress").string(), "--time", "19:30"});
        add({"correlate", "--data", data, "--out", (dir / "correlate").string()});
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto other = root / "b" / fs::relative(entry.path(), root / "a");
        ++compared;
        if (slurp(entry.path()) != slurp(other)) problems.push_back(fs::relative(entry.path(), root).string() + " differs");
    }
    for (const char* name : {"ablation_workday.csv", "ablation_weekend.csv"}) {
        const auto lines = body_lines(slurp(root / "a" / "ablate" / name));
        if (lines.size() != 17) {
            problems.push_back(std::string(name) + " has " + std::to_string(lines.size() - 1) + " rows");
            continue;
        }
        double prev = -INFINITY;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            // rank,mask,temperature,wind,humidity,barometer,mae,mse,...
            std::istringstream row(lines[i]);
            std::string field;
            for (int k = 0; k < 8; ++k) std::getline(row, field, ',');
            const double mse = std::stod(field);
            if (mse < prev) problems.push_back(std::string(name) + " not sorted by MSE");
            prev = mse;
        }
    }
    const auto bake = body_lines(slurp(root / "a" / "bakeoff" / "bakeoff.csv"));
    if (bake.empty() || bake[0] != "scope,model,mse,rmse,mae,score,status") problems.push_back("bakeoff header");
    const auto reg = body_lines(slurp(root / "a" / "regress" / "regression.csv"));
    if (reg.empty() || reg[0] != "slice,station,r,r_square,adj_r_square,rmse,durbin_watson,n,p,status") {
        problems.push_back("regression header");
    }
    std::string detail = std::to_string(compared) + " output files compared across two runs";
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty() && compared >= 15, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"1 OLS oracle", ols_oracle},
        {"2 metrics and correlation oracle", metrics_oracle},
        {"3 tree correctness", tree_correctness},
        {"4 variance reduction", variance_reduction},
        {"5 MLP gradient check", gradient_check},
        {"6 Durbin-Watson properties", durbin_watson_properties},
        {"7 ablation effect recovery", effect_recovery},
        {"8 null-effect control", null_control},
        {"9 classification recovery", classification_recovery},
        {"10 determinism and format", determinism_and_format},
    };
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) only.insert(argv[i]);
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const std::string id = std::string(name).substr(0, std::string(name).find(' '));
        if (!only.empty() && !only.contains(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ") [" << fmt("%.1f", seconds_since(t0))
                  << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
