#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sbsp {

struct ErrorMetrics {
    double abs_err = 0.0;
    double rel_err = 0.0;
    double eta = 0.0;  // 1 - min(rel_err, 1); 1 is a perfect forecast, 0 useless
};

// Throws std::invalid_argument when actual < 1 (relative error undefined).
ErrorMetrics error_metrics(double predicted, long long actual);

struct PredictionRecord {
    std::string experiment_id;
    std::string model_name;
    double predicted = 0.0;
    long long actual = 0;
};

// counts[model][k-1] = number of experiments where the model's absolute error
// ranks within the best k (ties broken by model name, so exactly one model
// occupies each rank).  Every experiment must carry the same model set;
// k_max must not exceed the number of models.
std::map<std::string, std::vector<long long>> topk_ranking(
    const std::vector<PredictionRecord>& records, int k_max);

struct BenchmarkResult {
    std::string report_json;  // the full report, serialized
};

// Runs a benchmark described by a JSON config: generate -> split -> fit ->
// predict -> score, or the planning variant with interval coverage against
// simulated ground truth.  Writes report.json plus CSV tables to out_dir
// (pass an empty path to skip file output) and returns the report.  The run
// is deterministic for a given config and seed: each replication draws from
// its own stream, so the thread count never changes the results.
BenchmarkResult run_benchmark_json(const std::string& config_json,
                                   const std::filesystem::path& out_dir,
                                   std::optional<std::uint64_t> seed_override = std::nullopt,
                                   int threads = 1);
BenchmarkResult run_benchmark_file(const std::filesystem::path& config_path,
                                   const std::filesystem::path& out_dir,
                                   std::optional<std::uint64_t> seed_override = std::nullopt,
                                   int threads = 1);

}  // namespace sbsp
