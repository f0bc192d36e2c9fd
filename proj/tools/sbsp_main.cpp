#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbsp/data_model.hpp"
#include "sbsp/evaluation.hpp"
#include "sbsp/fit.hpp"
#include "sbsp/generators.hpp"
#include "sbsp/ibp.hpp"
#include "sbsp/models.hpp"
#include "sbsp/planning.hpp"
#include "sbsp/rng.hpp"

namespace {

using nlohmann::json;
using namespace sbsp;

struct DataOptions {
    std::string input;
    std::string input_kind = "activity";  // activity | trigger
    long long d_override = 0;             // 0 means "use the data's own window"
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
    cmd->add_option("--input", opts.input, "input CSV path")->required();
    cmd->add_option("--input-kind", opts.input_kind, "input layout: activity or trigger")
        ->check(CLI::IsMember({"activity", "trigger"}));
    cmd->add_option("--d", opts.d_override, "observation window in days (overrides the data)")
        ->check(CLI::PositiveNumber);
}

SufficientStats load_stats(const DataOptions& opts, ModelKind model) {
    std::optional<long long> d;
    if (opts.d_override > 0) d = opts.d_override;
    if (opts.input_kind == "trigger") {
        if (model == ModelKind::bernoulli) {
            throw std::invalid_argument("the bernoulli model needs activity-matrix input");
        }
        return to_stats(ingest_trigger_csv(opts.input, d));
    }
    ActivityMatrix m = ingest_activity_csv(opts.input, d);
    return model == ModelKind::bernoulli ? to_stats(m) : to_stats_geometric(m);
}

struct HyperOptions {
    double alpha = -1, c = -1, beta = -1;
    bool any() const { return alpha >= 0 || c >= 0 || beta >= 0; }
    bool all() const { return alpha >= 0 && c >= 0 && beta >= 0; }
    HyperParams to_params() const {
        HyperParams h{alpha, c, beta};
        h.validate();
        return h;
    }
};

void add_hyper_options(CLI::App* cmd, HyperOptions& opts) {
    cmd->add_option("--alpha", opts.alpha, "stable index in (0,1); skips fitting when set");
    cmd->add_option("--c", opts.c, "shape hyperparameter (> 0)");
    cmd->add_option("--beta", opts.beta, "rate hyperparameter (> 0)");
}

// Either all three hyperparameters are pinned on the command line, or they are
// fitted by maximizing the marginal likelihood of the training window.
std::pair<HyperParams, json> resolve_hyper(const HyperOptions& opts,
                                           const SufficientStats& stats, ModelKind model) {
    if (opts.any()) {
        if (!opts.all()) {
            throw std::invalid_argument("--alpha, --c and --beta must be given together");
        }
        HyperParams h = opts.to_params();
        return {h, json{{"source", "fixed"},
                        {"alpha", h.alpha},
                        {"c", h.c},
                        {"beta", h.beta}}};
    }
    FitConfig cfg;
    cfg.model = model;
    FitResult fr = fit(stats, cfg);
    return {fr.hyper, json{{"source", "fitted"},
                           {"alpha", fr.hyper.alpha},
                           {"c", fr.hyper.c},
                           {"beta", fr.hyper.beta},
                           {"log_marginal", fr.log_marginal},
                           {"converged", fr.converged},
                           {"n_evals", fr.n_evals}}};
}

ModelKind parse_model(const std::string& name) {
    if (name == "bm") return ModelKind::bernoulli;
    if (name == "gm") return ModelKind::geometric;
    throw std::invalid_argument("unknown model \"" + name + "\" (expected bm or gm)");
}

long long negbin_quantile(const NegBinLaw& law, double p) {
    if (law.p >= 1.0) return 0;
    double cdf = 0.0;
    const double mean = law.mean();
    const long long cap = 1000 + static_cast<long long>(50.0 * (mean + 10.0));
    for (long long k = 0; k <= cap; ++k) {
        cdf += std::exp(law.log_pmf(k));
        if (cdf >= p - 1e-12) return k;
    }
    return cap;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json interval_json(const DmInterval& iv) {
    json j{{"method", iv.method},
           {"target_m", iv.target_m},
           {"level", iv.level},
           {"lower", iv.lower},
           {"upper", iv.upper ? json(*iv.upper) : json(nullptr)},
           {"censored_upper", !iv.upper.has_value()}};
    j["point"] = iv.point ? json(*iv.point) : json(nullptr);
    return j;
}

void write_band_csv(const CredibleBand& band, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "day,lo,mean,hi\n";
    out.precision(17);
    for (std::size_t i = 0; i < band.lo.size(); ++i) {
        out << (i + 1) << ',' << band.lo[i] << ',' << band.mean[i] << ',' << band.hi[i] << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"species-sampling user-growth toolkit"};
    app.require_subcommand(1);

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "fit hyperparameters by marginal likelihood");
    DataOptions fit_data;
    std::string fit_model = "gm";
    int fit_starts = 8;
    add_data_options(fit_cmd, fit_data);
    fit_cmd->add_option("--model", fit_model, "bm (activity) or gm (first-appearance)")
        ->check(CLI::IsMember({"bm", "gm"}));
    fit_cmd->add_option("--starts", fit_starts, "number of optimizer starts")
        ->check(CLI::PositiveNumber);
    fit_cmd->callback([&] {
        ModelKind kind = parse_model(fit_model);
        SufficientStats stats = load_stats(fit_data, kind);
        FitConfig cfg;
        cfg.model = kind;
        cfg.n_starts = fit_starts;
        FitResult fr = fit(stats, cfg);
        print_json(json{{"command", "fit"},
                        {"config",
                         {{"input", fit_data.input},
                          {"input_kind", fit_data.input_kind},
                          {"model", fit_model},
                          {"starts", fit_starts}}},
                        {"d", stats.d},
                        {"n_users", stats.n_users()},
                        {"fit",
                         {{"alpha", fr.hyper.alpha},
                          {"c", fr.hyper.c},
                          {"beta", fr.hyper.beta},
                          {"log_marginal", fr.log_marginal},
                          {"converged", fr.converged},
                          {"n_evals", fr.n_evals}}}});
    });

    // ---- predict ----
    auto* pred_cmd = app.add_subcommand("predict", "forecast new users over a horizon");
    DataOptions pred_data;
    std::string pred_model = "gm";
    HyperOptions pred_hyper;
    long long pred_horizon = 0;
    add_data_options(pred_cmd, pred_data);
    pred_cmd->add_option("--model", pred_model, "bm or gm")
        ->check(CLI::IsMember({"bm", "gm"}));
    add_hyper_options(pred_cmd, pred_hyper);
    pred_cmd->add_option("--horizon", pred_horizon, "forecast horizon in days")
        ->required()
        ->check(CLI::PositiveNumber);
    pred_cmd->callback([&] {
        ModelKind kind = parse_model(pred_model);
        SufficientStats stats = load_stats(pred_data, kind);
        auto [hyper, hyper_info] = resolve_hyper(pred_hyper, stats, kind);
        PosteriorState post = posterior(stats, hyper);
        NegBinLaw law = predict_new_users_law(post, pred_horizon);
        std::vector<double> traj = predictive_trajectory_means(post, pred_horizon);
        json quantiles;
        for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
            quantiles[std::to_string(p).substr(0, 4)] = negbin_quantile(law, p);
        }
        print_json(json{{"command", "predict"},
                        {"config",
                         {{"input", pred_data.input},
                          {"input_kind", pred_data.input_kind},
                          {"model", pred_model},
                          {"horizon", pred_horizon}}},
                        {"d", stats.d},
                        {"n_users", stats.n_users()},
                        {"hyper", hyper_info},
                        {"new_users",
                         {{"mean", law.mean()},
                          {"shape", law.r},
                          {"prob", law.p},
                          {"quantiles", quantiles}}},
                        {"trajectory_means", traj}});
    });

    // ---- plan ----
    auto* plan_cmd = app.add_subcommand("plan", "days-to-target credible intervals");
    DataOptions plan_data;
    std::string plan_model = "gm";
    HyperOptions plan_hyper;
    long long plan_target = 0;
    double plan_mult = 0.0;
    std::string plan_method = "both";
    double plan_level = 0.95;
    long long plan_kmc = 1000, plan_bandq = 1000, plan_dcap = 36500;
    std::uint64_t plan_seed = 1;
    std::string band_out;
    add_data_options(plan_cmd, plan_data);
    plan_cmd->add_option("--model", plan_model, "bm or gm")
        ->check(CLI::IsMember({"bm", "gm"}));
    add_hyper_options(plan_cmd, plan_hyper);
    auto* topt = plan_cmd->add_option("--target", plan_target, "total user count to reach")
                     ->check(CLI::PositiveNumber);
    auto* mopt = plan_cmd->add_option("--target-mult", plan_mult,
                                      "target as a multiple of current users (> 1)");
    topt->excludes(mopt);
    plan_cmd->add_option("--method", plan_method, "posterior, inversion or both")
        ->check(CLI::IsMember({"posterior", "inversion", "both"}));
    plan_cmd->add_option("--level", plan_level, "credible level in (0,1)");
    plan_cmd->add_option("--k-mc", plan_kmc, "Monte Carlo draws for the posterior method")
        ->check(CLI::PositiveNumber);
    plan_cmd->add_option("--band-q", plan_bandq, "sampled trajectories for the band")
        ->check(CLI::PositiveNumber);
    plan_cmd->add_option("--d-cap", plan_dcap, "hard cap on the look-ahead window (days)")
        ->check(CLI::PositiveNumber);
    plan_cmd->add_option("--seed", plan_seed, "random seed");
    plan_cmd->add_option("--band-out", band_out, "write the credible band as CSV");
    plan_cmd->callback([&] {
        ModelKind kind = parse_model(plan_model);
        SufficientStats stats = load_stats(plan_data, kind);
        auto [hyper, hyper_info] = resolve_hyper(plan_hyper, stats, kind);
        PosteriorState post = posterior(stats, hyper);

        long long target_m = plan_target;
        if (target_m == 0) {
            if (!(plan_mult > 1.0)) {
                throw std::invalid_argument("provide --target or --target-mult > 1");
            }
            target_m = static_cast<long long>(
                std::ceil(plan_mult * static_cast<double>(stats.n_users())));
        }
        if (target_m <= stats.n_users()) {
            throw std::invalid_argument("target must exceed the current user count");
        }

        RngStream rng(plan_seed);
        json out{{"command", "plan"},
                 {"config",
                  {{"input", plan_data.input},
                   {"input_kind", plan_data.input_kind},
                   {"model", plan_model},
                   {"method", plan_method},
                   {"level", plan_level},
                   {"k_mc", plan_kmc},
                   {"band_q", plan_bandq},
                   {"d_cap", plan_dcap},
                   {"seed", plan_seed}}},
                 {"d", stats.d},
                 {"n_users", stats.n_users()},
                 {"target_m", target_m},
                 {"hyper", hyper_info}};

        auto d_hat = point_estimate_dm(post, target_m, plan_dcap);
        out["point_estimate"] = d_hat ? json(*d_hat) : json(nullptr);

        if (plan_method == "posterior" || plan_method == "both") {
            PosteriorDmResult res =
                posterior_dm(post, target_m, plan_kmc, plan_level, rng, plan_dcap);
            json j = interval_json(res.interval);
            j["censored_draws"] = res.censored_draws;
            j["d_up_final"] = res.d_up_final;
            out["posterior"] = j;
        }
        if (plan_method == "inversion" || plan_method == "both") {
            long long horizon = 3 * std::max<long long>(d_hat.value_or(plan_dcap), 1);
            std::optional<DmInterval> iv;
            CredibleBand band;
            for (int attempt = 0; attempt < 6 && !iv; ++attempt) {
                band = global_band(post, plan_level, horizon, plan_bandq, rng);
                try {
                    iv = invert_band(band, target_m);
                } catch (const std::runtime_error&) {
                    horizon *= 2;
                }
            }
            if (!iv) throw std::runtime_error("credible band never reached the target");
            json j = interval_json(*iv);
            j["band_horizon"] = band.horizon;
            out["inversion"] = j;
            if (!band_out.empty()) write_band_csv(band, band_out);
        }
        print_json(out);
    });

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic cohort data");
    std::string sim_gen = "dg1";
    double sim_alpha = 0.5, sim_c = 1.0, sim_beta = 1.0, sim_gamma = 1.0;
    long long sim_pool = 100000, sim_days = 14;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim_cmd->add_option("--gen", sim_gen, "dg1, dg2, gm-prior or zipf")
        ->check(CLI::IsMember({"dg1", "dg2", "gm-prior", "zipf"}));
    sim_cmd->add_option("--alpha", sim_alpha, "stable index in (0,1)");
    sim_cmd->add_option("--c", sim_c, "shape hyperparameter");
    sim_cmd->add_option("--beta", sim_beta, "rate hyperparameter");
    sim_cmd->add_option("--gamma", sim_gamma, "zipf tail exponent");
    sim_cmd->add_option("--pool", sim_pool, "zipf population size")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--days", sim_days, "days to simulate")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim_seed, "random seed");
    sim_cmd->add_option("--out", sim_out, "output CSV path")->required();
    sim_cmd->callback([&] {
        RngStream rng(sim_seed);
        json gen_info{{"kind", sim_gen}, {"days", sim_days}, {"seed", sim_seed}};
        long long n_users = 0;
        std::string kind = "activity";
        if (sim_gen == "zipf") {
            ZipfPopulation pop{sim_pool, sim_gamma};
            ActivityMatrix m = generate_zipf(pop, sim_days, rng);
            emit_activity_csv(m, std::filesystem::path(sim_out));
            n_users = m.n_users();
            gen_info["pool"] = sim_pool;
            gen_info["gamma"] = sim_gamma;
        } else {
            HyperParams h{sim_alpha, sim_c, sim_beta};
            h.validate();
            gen_info["alpha"] = h.alpha;
            gen_info["c"] = h.c;
            gen_info["beta"] = h.beta;
            if (sim_gen == "dg1") {
                ActivityMatrix m = generate_bernoulli_prior(h, sim_days, rng);
                emit_activity_csv(m, std::filesystem::path(sim_out));
                n_users = m.n_users();
            } else if (sim_gen == "dg2") {
                ActivityMatrix m = generate_dg2(h, sim_days, rng);
                emit_activity_csv(m, std::filesystem::path(sim_out));
                n_users = m.n_users();
            } else {
                TriggerData t = generate_geometric_prior(h, sim_days, rng);
                emit_trigger_csv(t, std::filesystem::path(sim_out));
                n_users = t.n_users();
                kind = "trigger";
            }
        }
        print_json(json{{"command", "simulate"},
                        {"config", gen_info},
                        {"output", sim_out},
                        {"output_kind", kind},
                        {"n_users", n_users}});
    });

    // ---- benchmark ----
    auto* bench_cmd = app.add_subcommand("benchmark", "run a simulation study from a JSON config");
    std::string bench_config, bench_outdir;
    std::uint64_t bench_seed = 0;
    int bench_threads = 1;
    bench_cmd->add_option("--config", bench_config, "benchmark config JSON")->required();
    bench_cmd->add_option("--out-dir", bench_outdir, "directory for report.json and CSV tables");
    auto* seed_opt = bench_cmd->add_option("--seed", bench_seed, "override the config seed");
    bench_cmd->add_option("--threads", bench_threads, "worker threads")
        ->check(CLI::PositiveNumber);
    bench_cmd->callback([&] {
        std::optional<std::uint64_t> seed;
        if (seed_opt->count() > 0) seed = bench_seed;
        BenchmarkResult res = run_benchmark_file(bench_config, bench_outdir, seed, bench_threads);
        std::cout << res.report_json;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
