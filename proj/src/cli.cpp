#include "metroflow/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metroflow/error.hpp"
#include "metroflow/features.hpp"
#include "metroflow/harness.hpp"
#include "metroflow/ingest.hpp"
#include "metroflow/stats.hpp"
#include "metroflow/synthetic.hpp"
#include "metroflow/text.hpp"

namespace metroflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { Int, UInt, Double, String, IntList, Bool };

struct OptionDef {
    const char* key;  // config key
    const char* flag;
    Kind kind;
    const char* help;
};

// Keys naming files or runtime resources; they do not enter the config hash.
const std::set<std::string> kUnhashed{"config", "data", "out", "jobs", "flows", "weather", "holidays"};

const std::vector<OptionDef> kCommon{
    {"seed", "--seed", Kind::UInt, "seed for splits, ensembles, networks and the generator"},
    {"jobs", "--jobs", Kind::Int, "worker threads (output does not depend on it)"},
    {"out", "--out", Kind::String, "output directory"},
};
const std::vector<OptionDef> kIngest{
    {"flows", "--flows", Kind::String, "flow CSV"},
    {"weather", "--weather", Kind::String, "weather CSV"},
    {"holidays", "--holidays", Kind::String, "holiday calendar, one date per line (default: built-in 2018 list)"},
    {"slice_minutes", "--slice-minutes", Kind::Int, "slice width in minutes; must divide 60"},
    {"on_parse_error", "--on-parse-error", Kind::String, "abort|skip"},
    {"gap_fill", "--gap-fill", Kind::Bool, "interpolate weather gaps of at most two slices"},
};
const std::vector<OptionDef> kSynth{
    {"n_stations", "--n-stations", Kind::Int, "number of stations"},
    {"n_days", "--n-days", Kind::Int, "number of days"},
    {"slice_minutes", "--slice-minutes", Kind::Int, "slice width in minutes"},
    {"noise_scale", "--noise-scale", Kind::Double, "standard deviation of the flow noise"},
};
const std::vector<OptionDef> kData{
    {"data", "--data", Kind::String, "dataset directory written by ingest or synth"},
    {"class_mode", "--class-mode", Kind::String, "natural-break|quantile"},
    {"mean_quantile", "--mean-quantile", Kind::Double, "mean cut quantile (selects quantile mode)"},
    {"var_quantile", "--var-quantile", Kind::Double, "variance cut quantile (selects quantile mode)"},
};
const std::vector<OptionDef> kRows{
    {"mask", "--mask", Kind::String, "weather mask: all, none, a label like temperature+barometer, or bits like 1001"},
    {"day_type", "--day-type", Kind::String, "workday|weekend|all"},
    {"stations", "--stations", Kind::IntList, "comma-separated station ids (default: all)"},
};
const std::vector<OptionDef> kSplit{
    {"train_fraction", "--train-fraction", Kind::Double, "share of dates used for training"},
    {"split_mode", "--split-mode", Kind::String, "chronological|random"},
};
const std::vector<OptionDef> kModel{
    {"n_estimators", "--n-estimators", Kind::Int, "trees per ensemble"},
    {"max_depth", "--max-depth", Kind::Int, "tree depth limit"},
    {"min_samples_leaf", "--min-samples-leaf", Kind::Int, "minimum rows per leaf"},
    {"min_impurity_decrease", "--min-impurity-decrease", Kind::Double, "minimum SSE reduction per split"},
    {"feature_subsample", "--feature-subsample", Kind::Double, "random forest feature share per split"},
    {"bootstrap_size", "--bootstrap-size", Kind::Double, "bootstrap draw as a share of the training rows"},
    {"hidden_layers", "--hidden-layers", Kind::IntList, "MLP hidden widths, comma-separated"},
    {"learning_rate", "--learning-rate", Kind::Double, "MLP step size"},
    {"epochs", "--epochs", Kind::Int, "MLP epochs"},
    {"batch_size", "--batch-size", Kind::Int, "MLP minibatch size"},
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<OptionDef> defs;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::string config_path;
};

void add_defs(Command& cmd, const std::vector<OptionDef>& defs) {
    for (const auto& d : defs) {
        if (std::any_of(cmd.defs.begin(), cmd.defs.end(), [&](const OptionDef& e) { return e.flag == std::string(d.flag); })) {
            continue;
        }
        cmd.defs.push_back(d);
        if (d.kind == Kind::Bool) {
            cmd.app->add_flag(d.flag, cmd.flags[d.key], d.help);
        } else {
            cmd.app->add_option(d.flag, cmd.raw[d.key], d.help);
        }
    }
}

std::vector<int> parse_int_list(const std::string& s, const char* key) {
    std::vector<int> out;
    for (const auto part : text::split(s, ',')) {
        const auto v = text::to_int(text::trim(part));
        if (!v) throw CLI::ValidationError(key, "expected comma-separated integers, got '" + s + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

// Config file first, then every flag given on the command line.
json effective_config(const Command& cmd) {
    json cfg = json::object();
    if (!cmd.config_path.empty()) {
        std::ifstream in(cmd.config_path);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + cmd.config_path);
        try {
            cfg = json::parse(in);
        } catch (const json::exception& e) {
            throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
        }
        if (!cfg.is_object()) throw CLI::ValidationError("--config", "config must be a flat JSON object");
    }
    const bool quantile_in_config = cfg.contains("mean_quantile") || cfg.contains("var_quantile");
    bool quantile_flag = false;
    for (const auto& d : cmd.defs) {
        if (cmd.app->count(d.flag) == 0) continue;
        const std::string key = d.key;
        if (key == "mean_quantile" || key == "var_quantile") quantile_flag = true;
        if (d.kind == Kind::Bool) {
            cfg[key] = true;
            continue;
        }
        const std::string& v = cmd.raw.at(key);
        switch (d.kind) {
            case Kind::Int:
            case Kind::UInt: {
                const auto n = text::to_int(v);
                if (!n || (d.kind == Kind::UInt && *n < 0)) throw CLI::ValidationError(d.flag, "expected an integer");
                if (d.kind == Kind::UInt) cfg[key] = static_cast<std::uint64_t>(*n);
                else cfg[key] = *n;
                break;
            }
            case Kind::Double: {
                const auto x = text::to_double(v);
                if (!x) throw CLI::ValidationError(d.flag, "expected a number");
                cfg[key] = *x;
                break;
            }
            case Kind::IntList: cfg[key] = parse_int_list(v, d.flag); break;
            default: cfg[key] = v; break;
        }
    }
    if ((quantile_flag || quantile_in_config) && !cfg.contains("class_mode")) cfg["class_mode"] = "quantile";
    return cfg;
}

template <class T>
T get_or(const json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw CLI::ValidationError(key, "config value has the wrong type");
    }
}

struct Run {
    json cfg;
    std::string hash;
    std::uint64_t seed = 0;
    int jobs = 1;
    fs::path out;
    std::ostream* log = nullptr;
    std::ostream* warn = nullptr;

    std::string preamble() const { return "# metroflow config=" + hash + " seed=" + std::to_string(seed) + "\n"; }

    json provenance() const {
        json p;
        p["config_hash"] = hash;
        p["seed"] = seed;
        return p;
    }

    void write(const std::string& name, const std::string& body, const std::string& what) const {
        fs::create_directories(out);
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw InvalidArgument("cli", "dispatch", "cannot write " + (out / name).string());
        f << body;
        *log << "wrote " << (out / name).string() << " (" << what << ")\n";
    }
    void write_csv(const std::string& name, const std::string& csv, const std::string& what) const {
        write(name, preamble() + csv, what);
    }
    void write_json(const std::string& name, json body, const std::string& what) const {
        body["provenance"] = provenance();
        write(name, body.dump(2) + "\n", what);
    }
};

Run make_run(const Command& cmd, std::ostream& log, std::ostream& warn) {
    Run run;
    run.cfg = effective_config(cmd);
    json hashed = json::object();
    for (const auto& [k, v] : run.cfg.items()) {
        if (!kUnhashed.contains(k)) hashed[k] = v;
    }
    run.hash = text::fnv1a_hex(hashed.dump());
    run.seed = get_or<std::uint64_t>(run.cfg, "seed", 0);
    run.jobs = std::max(1, get_or<int>(run.cfg, "jobs", 1));
    run.out = get_or<std::string>(run.cfg, "out", ".");
    run.log = &log;
    run.warn = &warn;
    return run;
}

std::string require_path(const json& cfg, const char* key, const char* flag) {
    if (!cfg.contains(key)) throw CLI::RequiredError(flag);
    const auto p = get_or<std::string>(cfg, key, "");
    if (!fs::exists(p)) throw CLI::ValidationError(flag, "path does not exist: " + p);
    return p;
}

stations::ClassThresholds thresholds_from(const json& cfg) {
    stations::ClassThresholds t;
    const auto mode = get_or<std::string>(cfg, "class_mode", "natural-break");
    if (mode == "quantile") t.mode = stations::ThresholdMode::Quantile;
    else if (mode == "natural-break") t.mode = stations::ThresholdMode::NaturalBreak;
    else throw CLI::ValidationError("--class-mode", "expected natural-break or quantile");
    t.mean_quantile = get_or(cfg, "mean_quantile", t.mean_quantile);
    t.var_quantile = get_or(cfg, "var_quantile", t.var_quantile);
    return t;
}

stations::DayFilter day_filter_from(const json& cfg, stations::DayFilter fallback) {
    if (!cfg.contains("day_type")) return fallback;
    const auto s = get_or<std::string>(cfg, "day_type", "");
    if (s == "workday") return stations::DayFilter::Workday;
    if (s == "weekend") return stations::DayFilter::Weekend;
    if (s == "all") return stations::DayFilter::All;
    throw CLI::ValidationError("--day-type", "expected workday, weekend or all");
}

features::SplitSpec split_from(const Run& run) {
    features::SplitSpec s;
    s.train_fraction = get_or(run.cfg, "train_fraction", s.train_fraction);
    const auto mode = get_or<std::string>(run.cfg, "split_mode", "chronological");
    if (mode == "chronological") s.mode = features::SplitMode::Chronological;
    else if (mode == "random") s.mode = features::SplitMode::SeededRandom;
    else throw CLI::ValidationError("--split-mode", "expected chronological or random");
    s.seed = run.seed;
    return s;
}

harness::ModelSpec model_from(const Run& run) {
    harness::ModelSpec m;
    const auto& c = run.cfg;
    m.kind = harness::parse_model_kind(get_or<std::string>(c, "model", "bagging"));
    if (c.contains("max_depth")) m.tree.max_depth = get_or<int>(c, "max_depth", 0);
    m.tree.min_samples_leaf = get_or(c, "min_samples_leaf", m.tree.min_samples_leaf);
    m.tree.min_impurity_decrease = get_or(c, "min_impurity_decrease", m.tree.min_impurity_decrease);
    m.ensemble.n_estimators = get_or(c, "n_estimators", m.ensemble.n_estimators);
    m.ensemble.feature_subsample = get_or(c, "feature_subsample", m.ensemble.feature_subsample);
    m.ensemble.bootstrap_size = get_or(c, "bootstrap_size", m.ensemble.bootstrap_size);
    m.ensemble.seed = run.seed;
    m.mlp.hidden_layers = get_or(c, "hidden_layers", m.mlp.hidden_layers);
    m.mlp.learning_rate = get_or(c, "learning_rate", m.mlp.learning_rate);
    m.mlp.epochs = get_or(c, "epochs", m.mlp.epochs);
    m.mlp.batch_size = get_or(c, "batch_size", m.mlp.batch_size);
    m.mlp.seed = run.seed;
    return m;
}

json model_json(const harness::ModelSpec& m) {
    json j;
    j["kind"] = harness::to_string(m.kind);
    j["max_depth"] = m.tree.max_depth ? json(*m.tree.max_depth) : json(nullptr);
    j["min_samples_leaf"] = m.tree.min_samples_leaf;
    j["min_impurity_decrease"] = m.tree.min_impurity_decrease;
    j["n_estimators"] = m.ensemble.n_estimators;
    j["feature_subsample"] = m.ensemble.feature_subsample;
    j["bootstrap_size"] = m.ensemble.bootstrap_size;
    j["hidden_layers"] = m.mlp.hidden_layers;
    j["learning_rate"] = m.mlp.learning_rate;
    j["epochs"] = m.mlp.epochs;
    j["batch_size"] = m.mlp.batch_size;
    return j;
}

json split_json(const features::SplitSpec& s) {
    return json{{"train_fraction", s.train_fraction},
                {"mode", s.mode == features::SplitMode::Chronological ? "chronological" : "random"},
                {"seed", s.seed}};
}

Dataset load(const Run& run) { return ingest::read_dataset(require_path(run.cfg, "data", "--data")); }

std::vector<int> stations_from(const json& cfg) { return get_or<std::vector<int>>(cfg, "stations", {}); }

// ---- subcommands ----

int cmd_ingest(const Run& run) {
    const auto flows_path = require_path(run.cfg, "flows", "--flows");
    const auto weather_path = require_path(run.cfg, "weather", "--weather");
    const int slice_minutes = get_or(run.cfg, "slice_minutes", kDefaultSliceMinutes);
    const auto policy_text = get_or<std::string>(run.cfg, "on_parse_error", "abort");
    ingest::ParsePolicy policy;
    if (policy_text == "abort") policy = ingest::ParsePolicy::Abort;
    else if (policy_text == "skip") policy = ingest::ParsePolicy::Skip;
    else throw CLI::ValidationError("--on-parse-error", "expected abort or skip");

    HolidayCalendar calendar = HolidayCalendar::hong_kong_2018();
    if (run.cfg.contains("holidays")) {
        std::ifstream in(require_path(run.cfg, "holidays", "--holidays"));
        calendar = HolidayCalendar::parse(in);
    }
    std::ifstream flows_in(flows_path);
    std::ifstream weather_in(weather_path);
    const auto flows = ingest::parse_flow_csv(flows_in, policy);
    const auto weather = ingest::parse_weather_csv(weather_in, policy);
    for (const auto& m : flows.messages) *run.warn << "skipped flow row: " << m << '\n';
    for (const auto& m : weather.messages) *run.warn << "skipped weather row: " << m << '\n';
    const auto grid = ingest::align_weather(weather.records, {slice_minutes, get_or(run.cfg, "gap_fill", false)});
    const auto dataset = ingest::build_dataset(flows.records, grid, calendar, slice_minutes);
    ingest::write_dataset(dataset, run.out, run.preamble(), run.provenance());
    *run.log << "wrote " << run.out.string() << " (" << dataset.n_stations() << " stations, " << dataset.n_dates()
             << " dates; skipped " << flows.skipped << " flow and " << weather.skipped << " weather rows)\n";
    return 0;
}

int cmd_synth(const Run& run) {
    auto config = synthetic::config_from_json(run.cfg);
    config.seed = run.seed;
    const auto data = synthetic::generate_synthetic(config);
    ingest::write_dataset(data.dataset, run.out, run.preamble(), run.provenance());
    *run.log << "wrote " << run.out.string() << " (" << data.dataset.n_stations() << " stations, "
             << data.dataset.n_dates() << " dates)\n";
    run.write_json("ground_truth.json", synthetic::to_json(data.truth), "planted classes and effects");
    return 0;
}

int cmd_classify(const Run& run) {
    const auto dataset = load(run);
    const auto thresholds = thresholds_from(run.cfg);
    const auto stats = stations::station_stats(dataset, stations::DayFilter::All);
    const auto classes = stations::classify_stations(stats, thresholds);

    std::ostringstream csv;
    csv << "station,class,mean,variance\n";
    for (const auto& s : stats) {
        csv << s.station << ',' << stations::to_string(classes.at(s.station)) << ',' << text::format(s.mean_flow)
            << ',' << text::format(s.var_flow) << '\n';
    }
    run.write_csv("station_classes.csv", csv.str(), std::to_string(stats.size()) + " stations");

    // Average daily profile per class and day type, ready to plot.
    const int slots = dataset.slots_per_day();
    std::ostringstream profile;
    profile << "class,day_type,slot,time,mean_flow\n";
    for (std::size_t c = 0; c < stations::kStationClassCount; ++c) {
        const auto cls = static_cast<stations::StationClass>(c);
        for (const DayType dt : {DayType::Workday, DayType::Weekend}) {
            std::vector<double> sum(static_cast<std::size_t>(slots), 0.0);
            std::size_t cells = 0;
            for (std::size_t s = 0; s < dataset.n_stations(); ++s) {
                if (classes.at(dataset.stations()[s]) != cls) continue;
                for (std::size_t d = 0; d < dataset.n_dates(); ++d) {
                    if (dataset.day_type(d) != dt) continue;
                    ++cells;
                    for (int k = 0; k < slots; ++k) {
                        sum[static_cast<std::size_t>(k)] +=
                            static_cast<double>(dataset.flow(s, dataset.slice_position(d, k)));
                    }
                }
            }
            if (cells == 0) continue;
            for (int k = 0; k < slots; ++k) {
                profile << stations::to_string(cls) << ',' << to_string(dt) << ',' << k << ','
                        << slot_start(k, dataset.slice_minutes()).str() << ','
                        << text::format(sum[static_cast<std::size_t>(k)] / static_cast<double>(cells)) << '\n';
            }
        }
    }
    run.write_csv("slot_profile.csv", profile.str(), "average daily profile per class");
    return 0;
}

features::Assembled assemble_from(const Run& run, const Dataset& dataset, stations::DayFilter fallback) {
    const auto classes = harness::classify_dataset(dataset, thresholds_from(run.cfg));
    const auto mask = features::FeatureMask::parse(get_or<std::string>(run.cfg, "mask", "all"));
    features::AssembleOptions opts;
    opts.day_filter = day_filter_from(run.cfg, fallback);
    opts.stations = stations_from(run.cfg);
    return features::assemble(dataset, classes, mask, opts);
}

std::string matrix_csv(const features::DesignMatrix& m) {
    std::ostringstream csv;
    csv << "station,date,slot,day_type";
    for (const auto& c : m.column_names) csv << ',' << c;
    csv << ",target\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        csv << m.keys[i].station << ',' << m.keys[i].slice.date.iso() << ',' << m.keys[i].slice.slot << ','
            << to_string(m.day_types[i]);
        for (const double v : m.row(i)) csv << ',' << text::format(v);
        csv << ',' << text::format(m.targets[i]) << '\n';
    }
    return csv.str();
}

int cmd_assemble(const Run& run) {
    const auto dataset = load(run);
    const auto assembled = assemble_from(run, dataset, stations::DayFilter::All);
    const auto& m = assembled.matrix;
    const auto split_spec = split_from(run);
    const auto [train, test] = features::split(m, split_spec);
    const auto scaler = features::fit_scaler(train, features::weather_columns(train));

    run.write_csv("design_matrix.csv", matrix_csv(m), std::to_string(m.rows()) + " rows");
    json meta;
    meta["columns"] = m.column_names;
    meta["mask"] = features::FeatureMask::parse(get_or<std::string>(run.cfg, "mask", "all")).label();
    meta["day_type"] = std::string(stations::to_string(day_filter_from(run.cfg, stations::DayFilter::All)));
    meta["rows"] = m.rows();
    meta["dropped_insufficient_history"] = assembled.dropped_insufficient_history;
    meta["filtered_out"] = assembled.filtered_out;
    meta["split"] = split_json(split_spec);
    meta["train_rows"] = train.rows();
    meta["test_rows"] = test.rows();
    json cols = json::array();
    for (const auto& c : scaler.columns) {
        cols.push_back(json{{"column", m.column_names[c.index]},
                            {"mean", c.mean},
                            {"stddev", c.stddev},
                            {"zero_variance", c.zero_variance}});
    }
    meta["scaler"] = cols;
    run.write_json("design_matrix.json", meta, "columns, mask, scaler, dropped rows");
    return 0;
}

int cmd_train(const Run& run) {
    const auto dataset = load(run);
    const auto assembled = assemble_from(run, dataset, stations::DayFilter::All);
    const auto split_spec = split_from(run);
    const auto [train, test] = features::split(assembled.matrix, split_spec);
    const auto spec = model_from(run);
    const auto fit = harness::fit_and_score(train, test, spec, run.jobs);

    json model;
    model["model"] = models::to_json(fit.model);
    model["columns"] = train.column_names;
    model["spec"] = model_json(spec);
    run.write_json("model.json", model, harness::to_string(spec.kind));

    std::ostringstream pred;
    pred << "station,date,slot,actual,predicted\n";
    for (std::size_t i = 0; i < test.rows(); ++i) {
        pred << test.keys[i].station << ',' << test.keys[i].slice.date.iso() << ',' << test.keys[i].slice.slot << ','
             << text::format(test.targets[i]) << ',' << text::format(fit.predictions[i]) << '\n';
    }
    run.write_csv("predictions.csv", pred.str(), std::to_string(test.rows()) + " test rows");

    std::ostringstream metrics;
    metrics << "model,mae,mse,rmse,r2,n_train,n_test\n"
            << harness::to_string(spec.kind) << ',' << text::format(fit.metrics.mae) << ','
            << text::format(fit.metrics.mse) << ',' << text::format(fit.metrics.rmse) << ','
            << text::format(fit.metrics.r2) << ',' << train.rows() << ',' << test.rows() << '\n';
    run.write_csv("metrics.csv", metrics.str(), "test metrics");
    return 0;
}

int cmd_bakeoff(const Run& run) {
    const auto dataset = load(run);
    const auto spec = model_from(run);
    harness::BakeoffOptions opts;
    opts.mask = features::FeatureMask::parse(get_or<std::string>(run.cfg, "mask", "all"));
    opts.thresholds = thresholds_from(run.cfg);
    opts.tree = spec.tree;
    opts.ensemble = spec.ensemble;
    opts.mlp = spec.mlp;
    opts.day_type_rows = get_or(run.cfg, "day_type_rows", false);
    const auto rows = harness::run_bakeoff(dataset, stations_from(run.cfg), split_from(run), opts, run.jobs);
    run.write_csv("bakeoff.csv", harness::bakeoff_csv(rows), std::to_string(rows.size()) + " rows");
    return 0;
}

int cmd_ablate(const Run& run) {
    const auto dataset = load(run);
    harness::ScenarioTemplate scenario;
    scenario.model = model_from(run);
    scenario.thresholds = thresholds_from(run.cfg);
    scenario.stations = stations_from(run.cfg);
    scenario.per_station = get_or(run.cfg, "per_station", false);
    const auto split_spec = split_from(run);
    const auto reports = harness::run_ablation(dataset, scenario, split_spec,
                                               {stations::DayFilter::Workday, stations::DayFilter::Weekend}, run.jobs);
    bool errored = false;
    json meta;
    meta["model"] = model_json(scenario.model);
    meta["split"] = split_json(split_spec);
    meta["per_station"] = scenario.per_station;
    meta["stations"] = scenario.stations;
    json reports_meta = json::array();
    for (const auto& r : reports) {
        const std::string name = "ablation_" + std::string(stations::to_string(r.day_filter)) + ".csv";
        run.write_csv(name, harness::ablation_csv(r), std::to_string(r.rows.size()) + " masks");
        json errors = json::array();
        for (const auto& row : r.rows) {
            if (!row.error.empty()) errors.push_back(row.error);
        }
        errored = errored || !errors.empty();
        reports_meta.push_back(json{{"file", name},
                                    {"day_type", std::string(stations::to_string(r.day_filter))},
                                    {"dropped_insufficient_history", r.dropped_insufficient_history},
                                    {"errors", errors}});
    }
    meta["reports"] = reports_meta;
    run.write_json("ablation.json", meta, "run metadata");
    if (errored) {
        *run.warn << "ablate: at least one scenario errored; see ablation.json\n";
        return 1;
    }
    return 0;
}

int cmd_regress(const Run& run) {
    const auto dataset = load(run);
    const auto time = ClockTime::parse(get_or<std::string>(run.cfg, "time", "08:00"));
    const int slot = slice_of(dataset.dates().front(), time, dataset.slice_minutes()).slot;
    const auto filter = day_filter_from(run.cfg, stations::DayFilter::Workday);
    if (filter == stations::DayFilter::All) throw CLI::ValidationError("--day-type", "regress needs workday or weekend");
    auto ids = stations_from(run.cfg);
    if (ids.empty()) ids = dataset.stations();
    const auto rows = harness::run_regression_study(
        dataset, ids, slot, filter == stations::DayFilter::Workday ? DayType::Workday : DayType::Weekend);
    run.write_csv("regression.csv", harness::regression_csv(rows), std::to_string(rows.size()) + " stations");
    return 0;
}

int cmd_correlate(const Run& run) {
    const auto dataset = load(run);
    const auto assembled = assemble_from(run, dataset, stations::DayFilter::All);
    const auto table = stats::correlation_table(assembled.matrix);
    run.write_csv("correlation.csv", harness::correlation_csv(table), std::to_string(table.size()) + " variables");
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"metroflow: metro passenger-flow forecasting with weather ablation", "metroflow"};
    app.require_subcommand(1, 1);

    struct Entry {
        const char* name;
        const char* help;
        std::vector<const std::vector<OptionDef>*> groups;
        std::function<int(const Run&)> fn;
    };
    const std::vector<Entry> entries{
        {"ingest", "parse flow and weather CSVs into the canonical dataset", {&kIngest}, cmd_ingest},
        {"synth", "generate a synthetic dataset with known ground truth", {&kSynth}, cmd_synth},
        {"classify", "split stations into mean/variance quadrants", {&kData}, cmd_classify},
        {"assemble", "write the design matrix", {&kData, &kRows, &kSplit}, cmd_assemble},
        {"train", "fit one model and score it on the held-out dates", {&kData, &kRows, &kSplit, &kModel}, cmd_train},
        {"bakeoff", "compare bagging, random forest and MLP", {&kData, &kRows, &kSplit, &kModel}, cmd_bakeoff},
        {"ablate", "score all 16 weather masks on workdays and weekends", {&kData, &kSplit, &kModel}, cmd_ablate},
        {"regress", "per-station OLS of centered flow on weather", {&kData}, cmd_regress},
        {"correlate", "Pearson correlation of every feature with the flow", {&kData, &kRows}, cmd_correlate},
    };

    std::vector<Command> commands(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& cmd = commands[i];
        cmd.app = app.add_subcommand(entries[i].name, entries[i].help);
        cmd.app->add_option("--config", cmd.config_path, "flat JSON config; flags override it");
        add_defs(cmd, kCommon);
        for (const auto* g : entries[i].groups) add_defs(cmd, *g);
        const std::string name = entries[i].name;
        if (name == "train" || name == "ablate") {
            add_defs(cmd, {{"model", "--model", Kind::String, "tree|bagging|forest|mlp"}});
        }
        if (name == "ablate") {
            add_defs(cmd, {{"stations", "--stations", Kind::IntList, "comma-separated station ids (default: all)"},
                           {"per_station", "--per-station", Kind::Bool, "fit one model per station"}});
        }
        if (name == "bakeoff") {
            add_defs(cmd, {{"day_type_rows", "--day-type-rows", Kind::Bool, "add forest rows per day type"}});
        }
        if (name == "regress") {
            add_defs(cmd, {{"stations", "--stations", Kind::IntList, "comma-separated station ids (default: all)"},
                           {"time", "--time", Kind::String, "clock time inside the slice, e.g. 08:00"},
                           {"day_type", "--day-type", Kind::String, "workday|weekend"}});
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!commands[i].app->parsed()) continue;
        try {
            const Run run = make_run(commands[i], out, err);
            return entries[i].fn(run);
        } catch (const CLI::Error& e) {
            err << "error: " << e.what() << "\n\n" << commands[i].app->help();
            return 2;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
    err << app.help();
    return 2;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace metroflow::cli
