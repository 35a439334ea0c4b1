#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "metroflow/core_model.hpp"
#include "metroflow/features.hpp"
#include "metroflow/models.hpp"
#include "metroflow/stations.hpp"
#include "metroflow/stats.hpp"

namespace metroflow::harness {

/// All 16 weather masks, binary counting over (temperature, wind, humidity, barometer).
std::vector<features::FeatureMask> enumerate_masks();

enum class ModelKind { Tree, Bagging, Forest, Mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct ModelSpec {
    ModelKind kind = ModelKind::Bagging;
    models::TreeParams tree;
    models::EnsembleParams ensemble;
    models::MlpParams mlp;
};

/// Everything but the mask and day filter of one ablation run.
struct ScenarioTemplate {
    ModelSpec model;
    stations::ClassThresholds thresholds;
    /// Empty means every station.
    std::vector<int> stations;
    /// Fit one model per station instead of one pooled model.
    bool per_station = false;
};

/// Weather columns z-scored on the training rows; for the MLP every column and the
/// target are standardised and predictions mapped back.
struct FitResult {
    std::vector<double> predictions;
    stats::Metrics metrics;
    models::FittedModel model;
};

FitResult fit_and_score(const features::DesignMatrix& train, const features::DesignMatrix& test,
                        const ModelSpec& spec, int jobs = 1);

struct AblationRow {
    features::FeatureMask mask;
    stats::Metrics metrics;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::string error;  // empty when the scenario ran
};

struct AblationReport {
    stations::DayFilter day_filter = stations::DayFilter::Workday;
    /// Ascending MSE; ties and errored rows keep canonical mask order, errors last.
    std::vector<AblationRow> rows;
    std::uint64_t seed = 0;
    features::SplitSpec split;
    ModelSpec model;
    std::size_t dropped_insufficient_history = 0;
};

/// Stations classified on the whole dataset with the given thresholds.
std::map<int, stations::StationClass> classify_dataset(const Dataset& dataset,
                                                       const stations::ClassThresholds& thresholds);

/**
 * For every mask and each day filter: assemble, split, scale, fit, predict, score.
 * All masks share one seed so bootstrap streams coincide and only the columns differ.
 * `jobs` bounds the worker pool; output does not depend on it.
 */
std::vector<AblationReport> run_ablation(const Dataset& dataset, const ScenarioTemplate& scenario,
                                         const features::SplitSpec& split,
                                         const std::vector<stations::DayFilter>& filters =
                                             {stations::DayFilter::Workday, stations::DayFilter::Weekend},
                                         int jobs = 1);

struct BakeoffOptions {
    features::FeatureMask mask = features::FeatureMask::all();
    stations::ClassThresholds thresholds;
    models::TreeParams tree;
    models::EnsembleParams ensemble;
    models::MlpParams mlp;
    /// Adds random-forest rows fitted on workdays and on weekends separately.
    bool day_type_rows = false;
};

struct BakeoffRow {
    std::string scope;
    std::string model;
    stats::Metrics metrics;
    std::string status;  // "ok" or the failure
};

/// Bagging, random forest and MLP on identical features and splits.
std::vector<BakeoffRow> run_bakeoff(const Dataset& dataset, const std::vector<int>& station_subset,
                                    const features::SplitSpec& split, const BakeoffOptions& options = {},
                                    int jobs = 1);

struct RegressionRow {
    int station = 0;
    std::string slice_label;
    stats::OlsFit fit;
    std::vector<std::string> regressors;
    std::string status;  // "ok", or why the row has no fit
};

/**
 * Per station: centered flow at `slot` over the dates of `day_type`, regressed on
 * z-scored humidity, temperature and barometer plus the raw rain level. Regressors
 * that are constant over the selection are dropped and named in `status`.
 */
std::vector<RegressionRow> run_regression_study(const Dataset& dataset, const std::vector<int>& station_ids,
                                                int slot, DayType day_type);

/// Presets for the regression study, as clock times.
struct SlotPresets {
    static constexpr int kMorningPeakStart = 7 * 60 + 30;
    static constexpr int kMorningPeakEnd = 8 * 60 + 30;
    static constexpr int kEveningPeakStart = 17 * 60 + 15;
    static constexpr int kEveningPeakEnd = 19 * 60 + 30;
    static constexpr int kMorningOffPeak = 10 * 60;
    static constexpr int kEveningProbe = 19 * 60 + 30;
};

/// Runs `task(i)` for i in [0, n) on at most `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

// CSV renderings. Column orders are fixed; see each header below.

/// rank,mask,temperature,wind,humidity,barometer,mae,mse,rmse,r2,n_train,n_test,status
std::string ablation_csv(const AblationReport& report);
/// scope,model,mse,rmse,mae,score,status
std::string bakeoff_csv(const std::vector<BakeoffRow>& rows);
/// slice,station,r,r_square,adj_r_square,rmse,durbin_watson,n,p,status
std::string regression_csv(const std::vector<RegressionRow>& rows);
/// variable,total,workdays,weekends,flag
std::string correlation_csv(const std::vector<stats::CorrelationRow>& rows);

}  // namespace metroflow::harness
