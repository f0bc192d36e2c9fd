#include "sbsp/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "sbsp/data_model.hpp"
#include "sbsp/fit.hpp"
#include "sbsp/generators.hpp"
#include "sbsp/ibp.hpp"
#include "sbsp/models.hpp"
#include "sbsp/planning.hpp"
#include "sbsp/rng.hpp"

namespace sbsp {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

struct GeneratorConfig {
    std::string kind;  // dg1 | dg2 | gm-prior | zipf
    double alpha = 0.5;
    double c = 1.0;
    double beta = 1.0;
    std::optional<std::pair<double, double>> alpha_beta_draw;  // per-rep alpha ~ Beta(a,b)
    long long pool = 0;                                        // zipf
    std::vector<double> gammas;                                // zipf, cycled per rep
};

struct BenchmarkConfig {
    std::string name = "benchmark";
    std::string task;  // predict | plan
    std::uint64_t seed = 1;
    long long replications = 0;
    long long train_days = 0;
    long long horizon = 0;  // predict
    std::vector<std::string> models;
    GeneratorConfig generator;
    FitConfig fit_cfg;
    std::optional<std::string> external_predictions;
    // plan task
    std::vector<double> target_mults;
    double level = 0.95;
    long long k_mc = 1000;
    long long band_q = 1000;
    long long d_cap = 36500;
};

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw std::invalid_argument("unknown key \"" + item.key() + "\" in " + where);
        }
    }
}

GeneratorConfig parse_generator(const json& g) {
    reject_unknown_keys(g, {"kind", "alpha", "c", "beta", "alpha_beta", "pool", "gammas"},
                        "generator");
    GeneratorConfig out;
    out.kind = g.at("kind").get<std::string>();
    if (out.kind != "dg1" && out.kind != "dg2" && out.kind != "gm-prior" && out.kind != "zipf") {
        throw std::invalid_argument("unknown generator kind \"" + out.kind + "\"");
    }
    if (g.contains("alpha")) out.alpha = g.at("alpha").get<double>();
    if (g.contains("c")) out.c = g.at("c").get<double>();
    if (g.contains("beta")) out.beta = g.at("beta").get<double>();
    if (g.contains("alpha_beta")) {
        auto ab = g.at("alpha_beta").get<std::vector<double>>();
        if (ab.size() != 2 || ab[0] <= 0 || ab[1] <= 0) {
            throw std::invalid_argument("generator.alpha_beta must be two positive numbers");
        }
        out.alpha_beta_draw = {ab[0], ab[1]};
    }
    if (out.kind == "zipf") {
        out.pool = g.at("pool").get<long long>();
        out.gammas = g.at("gammas").get<std::vector<double>>();
        if (out.pool < 1) throw std::invalid_argument("generator.pool must be >= 1");
        if (out.gammas.empty()) throw std::invalid_argument("generator.gammas must be non-empty");
        for (double gv : out.gammas) {
            if (!(gv > 0)) throw std::invalid_argument("generator.gammas entries must be > 0");
        }
    } else if (g.contains("pool") || g.contains("gammas")) {
        throw std::invalid_argument("pool/gammas only apply to the zipf generator");
    }
    return out;
}

FitConfig parse_fit(const json& f) {
    reject_unknown_keys(f, {"n_starts", "max_iters", "tol"}, "fit");
    FitConfig out;
    if (f.contains("n_starts")) out.n_starts = f.at("n_starts").get<int>();
    if (f.contains("max_iters")) out.max_iters = f.at("max_iters").get<int>();
    if (f.contains("tol")) out.tol = f.at("tol").get<double>();
    return out;
}

BenchmarkConfig parse_config(const json& j) {
    reject_unknown_keys(j,
                        {"name", "task", "seed", "replications", "train_days", "horizon", "models",
                         "generator", "fit", "external_predictions", "target_mults", "level",
                         "k_mc", "band_q", "d_cap"},
                        "config");
    BenchmarkConfig cfg;
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    cfg.task = j.at("task").get<std::string>();
    if (cfg.task != "predict" && cfg.task != "plan") {
        throw std::invalid_argument("task must be \"predict\" or \"plan\"");
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.replications = j.at("replications").get<long long>();
    if (cfg.replications < 0) throw std::invalid_argument("replications must be >= 0");
    cfg.train_days = j.at("train_days").get<long long>();
    if (cfg.train_days < 1) throw std::invalid_argument("train_days must be >= 1");
    cfg.generator = parse_generator(j.at("generator"));
    if (j.contains("fit")) cfg.fit_cfg = parse_fit(j.at("fit"));

    if (cfg.task == "predict") {
        cfg.horizon = j.at("horizon").get<long long>();
        if (cfg.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
        cfg.models = j.at("models").get<std::vector<std::string>>();
        if (cfg.models.empty()) throw std::invalid_argument("models must be non-empty");
        std::set<std::string> seen;
        for (const auto& m : cfg.models) {
            if (m != "bm" && m != "gm" && m != "ibp" && m != "oracle") {
                throw std::invalid_argument("unknown model \"" + m + "\"");
            }
            if (!seen.insert(m).second) throw std::invalid_argument("duplicate model \"" + m + "\"");
        }
        if (j.contains("external_predictions")) {
            cfg.external_predictions = j.at("external_predictions").get<std::string>();
        }
        if (j.contains("target_mults") || j.contains("k_mc") || j.contains("band_q")) {
            throw std::invalid_argument("planning keys are not valid for the predict task");
        }
    } else {
        cfg.target_mults = j.at("target_mults").get<std::vector<double>>();
        if (cfg.target_mults.empty()) throw std::invalid_argument("target_mults must be non-empty");
        for (double m : cfg.target_mults) {
            if (!(m > 1.0)) throw std::invalid_argument("target_mults entries must be > 1");
        }
        if (j.contains("level")) cfg.level = j.at("level").get<double>();
        if (!(cfg.level > 0 && cfg.level < 1)) throw std::invalid_argument("level must be in (0,1)");
        if (j.contains("k_mc")) cfg.k_mc = j.at("k_mc").get<long long>();
        if (j.contains("band_q")) cfg.band_q = j.at("band_q").get<long long>();
        if (j.contains("d_cap")) cfg.d_cap = j.at("d_cap").get<long long>();
        if (cfg.generator.kind != "zipf") {
            throw std::invalid_argument("the plan task requires the zipf generator");
        }
        if (j.contains("models") || j.contains("horizon") || j.contains("external_predictions")) {
            throw std::invalid_argument("models/horizon/external_predictions are not valid for the plan task");
        }
    }
    return cfg;
}

json echo_config(const BenchmarkConfig& cfg) {
    json g{{"kind", cfg.generator.kind},
           {"alpha", cfg.generator.alpha},
           {"c", cfg.generator.c},
           {"beta", cfg.generator.beta}};
    if (cfg.generator.alpha_beta_draw) {
        g["alpha_beta"] = {cfg.generator.alpha_beta_draw->first,
                           cfg.generator.alpha_beta_draw->second};
    }
    if (cfg.generator.kind == "zipf") {
        g["pool"] = cfg.generator.pool;
        g["gammas"] = cfg.generator.gammas;
    }
    json j{{"name", cfg.name},
           {"task", cfg.task},
           {"seed", cfg.seed},
           {"replications", cfg.replications},
           {"train_days", cfg.train_days},
           {"generator", g},
           {"fit",
            {{"n_starts", cfg.fit_cfg.n_starts},
             {"max_iters", cfg.fit_cfg.max_iters},
             {"tol", cfg.fit_cfg.tol}}}};
    if (cfg.task == "predict") {
        j["horizon"] = cfg.horizon;
        j["models"] = cfg.models;
        if (cfg.external_predictions) j["external_predictions"] = *cfg.external_predictions;
    } else {
        j["target_mults"] = cfg.target_mults;
        j["level"] = cfg.level;
        j["k_mc"] = cfg.k_mc;
        j["band_q"] = cfg.band_q;
        j["d_cap"] = cfg.d_cap;
    }
    return j;
}

// ---------------------------------------------------------------------------
// per-replication work

struct PredictRep {
    std::string experiment_id;
    double alpha_true = 0.0;
    double gamma_true = 0.0;  // zipf only
    long long n_train = 0;
    long long actual = 0;
    std::vector<std::pair<std::string, double>> predictions;  // model -> point forecast
    std::optional<std::string> error;
};

struct PlanRow {
    std::string method;
    double target_mult = 0.0;
    long long target_m = 0;
    long long true_dm = 0;
    long long lower = 0;
    std::optional<long long> upper;
    std::optional<long long> point;
};

struct PlanRep {
    std::string experiment_id;
    double gamma_true = 0.0;
    long long n_train = 0;
    std::vector<PlanRow> rows;
    std::optional<std::string> error;
};

HyperParams rep_hyper(const GeneratorConfig& g, RngStream& rng) {
    HyperParams h{g.alpha, g.c, g.beta};
    if (g.alpha_beta_draw) {
        h.alpha = sample_beta(g.alpha_beta_draw->first, g.alpha_beta_draw->second, rng);
    }
    return h;
}

// Users whose first active day falls strictly after `train` form the held-out
// count; the training slice keeps earlier rows only.
std::pair<ActivityMatrix, long long> split_activity(const ActivityMatrix& full, long long train) {
    ActivityMatrix head;
    head.d = train;
    long long held_out = 0;
    for (const auto& u : full.users) {
        std::vector<long long> kept;
        for (long long day : u.active_days) {
            if (day <= train) kept.push_back(day);
        }
        if (kept.empty()) {
            ++held_out;
            continue;
        }
        head.users.push_back({u.user_id, std::move(kept)});
    }
    return {std::move(head), held_out};
}

std::pair<TriggerData, long long> split_triggers(const TriggerData& full, long long train) {
    TriggerData head;
    head.d = train;
    long long held_out = 0;
    for (const auto& t : full.triggers) {
        if (t.first_day <= train) {
            head.triggers.push_back(t);
        } else {
            ++held_out;
        }
    }
    return {std::move(head), held_out};
}

PredictRep run_predict_rep(const BenchmarkConfig& cfg, long long rep) {
    PredictRep out;
    out.experiment_id = cfg.name + "-r" + std::to_string(rep);
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
    const long long total_days = cfg.train_days + cfg.horizon;

    HyperParams truth = rep_hyper(cfg.generator, rng);
    out.alpha_true = truth.alpha;

    SufficientStats bern_stats;   // counts of active days, for bm/ibp
    SufficientStats geom_stats;   // counts since first activity, for gm
    bool have_bern = false;
    if (cfg.generator.kind == "gm-prior") {
        TriggerData full = generate_geometric_prior(truth, total_days, rng);
        auto [head, held] = split_triggers(full, cfg.train_days);
        geom_stats = to_stats(head);
        out.actual = held;
    } else {
        ActivityMatrix full;
        if (cfg.generator.kind == "dg1") {
            full = generate_bernoulli_prior(truth, total_days, rng);
        } else if (cfg.generator.kind == "dg2") {
            full = generate_dg2(truth, total_days, rng);
        } else {  // zipf
            const double gamma = cfg.generator.gammas[static_cast<std::size_t>(rep) %
                                                      cfg.generator.gammas.size()];
            out.gamma_true = gamma;
            ZipfPopulation pop{cfg.generator.pool, gamma};
            full = generate_zipf(pop, total_days, rng);
        }
        auto [head, held] = split_activity(full, cfg.train_days);
        // Both views come from the same training slice, so bm and gm fit the
        // identical data window.
        bern_stats = to_stats(head);
        geom_stats = to_stats_geometric(head);
        out.actual = held;
        have_bern = true;
    }

    out.n_train = have_bern ? bern_stats.n_users() : geom_stats.n_users();

    for (const auto& model : cfg.models) {
        if (model == "bm") {
            if (!have_bern) throw std::invalid_argument("bm requires activity-matrix data");
            FitConfig fc = cfg.fit_cfg;
            fc.model = ModelKind::bernoulli;
            FitResult fr = fit(bern_stats, fc);
            auto law = predict_new_users_law(posterior(bern_stats, fr.hyper), cfg.horizon);
            out.predictions.emplace_back(model, law.mean());
        } else if (model == "gm") {
            FitConfig fc = cfg.fit_cfg;
            fc.model = ModelKind::geometric;
            FitResult fr = fit(geom_stats, fc);
            auto law = predict_new_users_law(posterior(geom_stats, fr.hyper), cfg.horizon);
            out.predictions.emplace_back(model, law.mean());
        } else if (model == "ibp") {
            if (!have_bern) throw std::invalid_argument("ibp requires activity-matrix data");
            IbpParams params = ibp_fit(bern_stats);
            out.predictions.emplace_back(
                model, ibp_predict_new_users(params, cfg.train_days, cfg.horizon));
        } else {  // oracle
            if (cfg.generator.kind == "zipf") {
                throw std::invalid_argument("oracle is undefined for the zipf generator");
            }
            SufficientStats base = have_bern ? bern_stats : geom_stats;
            auto law = predict_new_users_law(posterior(base, truth), cfg.horizon);
            out.predictions.emplace_back(model, law.mean());
        }
    }
    return out;
}

PlanRep run_plan_rep(const BenchmarkConfig& cfg, long long rep) {
    PlanRep out;
    out.experiment_id = cfg.name + "-r" + std::to_string(rep);
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
    const double gamma =
        cfg.generator.gammas[static_cast<std::size_t>(rep) % cfg.generator.gammas.size()];
    out.gamma_true = gamma;
    ZipfPopulation pop{cfg.generator.pool, gamma};

    std::vector<long long> first_days = zipf_first_trigger_days(pop, rng);
    std::sort(first_days.begin(), first_days.end());

    TriggerData train;
    train.d = cfg.train_days;
    for (std::size_t i = 0; i < first_days.size() &&
                            first_days[i] <= cfg.train_days; ++i) {
        train.triggers.push_back({"u" + std::to_string(i + 1), first_days[i]});
    }
    SufficientStats stats = to_stats(train);
    out.n_train = stats.n_users();
    if (out.n_train < 1) {
        out.error = "no users observed in the training window";
        return out;
    }

    FitConfig fc = cfg.fit_cfg;
    fc.model = ModelKind::geometric;
    FitResult fr = fit(stats, fc);
    PosteriorState post = posterior(stats, fr.hyper);

    for (double mult : cfg.target_mults) {
        const long long target_m =
            static_cast<long long>(std::ceil(mult * static_cast<double>(out.n_train)));
        if (target_m > static_cast<long long>(first_days.size())) {
            out.error = "target exceeds the population pool";
            return out;
        }
        // Day (counted from the end of training) on which the target is hit.
        long long true_dm = first_days[static_cast<std::size_t>(target_m - 1)] - cfg.train_days;
        if (true_dm < 1) true_dm = 0;  // already attained in training

        PosteriorDmResult pres =
            posterior_dm(post, target_m, cfg.k_mc, cfg.level, rng, cfg.d_cap);
        out.rows.push_back({"posterior", mult, target_m, true_dm, pres.interval.lower,
                            pres.interval.upper, pres.interval.point});

        long long d_hat = point_estimate_dm(post, target_m, cfg.d_cap).value_or(cfg.d_cap);
        long long horizon = 3 * std::max<long long>(d_hat, 1);
        std::optional<DmInterval> inv;
        for (int attempt = 0; attempt < 6 && !inv; ++attempt) {
            CredibleBand band = global_band(post, cfg.level, horizon, cfg.band_q, rng);
            try {
                inv = invert_band(band, target_m);
            } catch (const std::runtime_error&) {
                horizon *= 2;  // band too short for the target; extend and retry
            }
        }
        if (!inv) {
            out.error = "band never reached the target";
            return out;
        }
        out.rows.push_back({"inversion", mult, target_m, true_dm, inv->lower, inv->upper,
                            inv->point});
    }
    return out;
}

// ---------------------------------------------------------------------------
// external predictions (predict task only)

std::vector<PredictionRecord> load_external_predictions(
    const std::filesystem::path& path, const std::map<std::string, long long>& actual_by_id,
    const std::set<std::string>& internal_models) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "experiment_id,model_name,predicted_new_users") {
        throw parse_error(path.string() + ": expected header experiment_id,model_name,predicted_new_users");
    }
    std::vector<PredictionRecord> out;
    long long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string eid, model, value;
        if (!std::getline(ss, eid, ',') || !std::getline(ss, model, ',') ||
            !std::getline(ss, value)) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": expected three comma-separated fields");
        }
        auto it = actual_by_id.find(eid);
        if (it == actual_by_id.end()) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": unknown experiment_id \"" + eid + "\"");
        }
        if (internal_models.count(model)) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": model name \"" + model + "\" collides with a built-in model");
        }
        double pred = 0.0;
        try {
            pred = std::stod(value);
        } catch (const std::exception&) {
            throw parse_error(path.string() + ":" + std::to_string(line_no) +
                              ": bad prediction value \"" + value + "\"");
        }
        out.push_back({eid, model, pred, it->second});
    }
    return out;
}

// ---------------------------------------------------------------------------
// aggregation helpers

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    auto idx = static_cast<std::size_t>(
        std::max<long long>(0, static_cast<long long>(
                                   std::ceil(p * static_cast<double>(sorted.size()))) -
                                   1));
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    return sorted[idx];
}

template <typename F>
void parallel_for(long long n, int threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (long long i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<long long> next{0};
    auto worker = [&] {
        for (long long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    };
    std::vector<std::thread> pool;
    const int n_threads = static_cast<int>(std::min<long long>(threads, n));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string csv_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------------------
// task drivers

json run_predict_task(const BenchmarkConfig& cfg, const std::filesystem::path& out_dir,
                      int threads) {
    std::vector<PredictRep> reps(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, threads, [&](long long i) {
        auto& slot = reps[static_cast<std::size_t>(i)];
        try {
            slot = run_predict_rep(cfg, i);
        } catch (const std::exception& e) {
            slot.experiment_id = cfg.name + "-r" + std::to_string(i);
            slot.error = e.what();
        }
    });

    std::vector<PredictionRecord> records;
    std::map<std::string, long long> actual_by_id;
    json failures = json::array();
    for (const auto& r : reps) {
        if (r.error) {
            failures.push_back({{"experiment_id", r.experiment_id}, {"error", *r.error}});
            continue;
        }
        if (r.actual < 1) {
            failures.push_back({{"experiment_id", r.experiment_id},
                                {"error", "no held-out arrivals; relative error undefined"}});
            continue;
        }
        actual_by_id[r.experiment_id] = r.actual;
        for (const auto& [model, pred] : r.predictions) {
            records.push_back({r.experiment_id, model, pred, r.actual});
        }
    }
    if (cfg.external_predictions) {
        auto ext = load_external_predictions(*cfg.external_predictions, actual_by_id,
                                             std::set<std::string>(cfg.models.begin(),
                                                                   cfg.models.end()));
        records.insert(records.end(), ext.begin(), ext.end());
    }

    // per-record table
    json record_rows = json::array();
    std::ostringstream csv;
    csv << "experiment_id,model,predicted,actual,abs_err,rel_err,eta\n";
    std::map<std::string, std::vector<double>> abs_by_model, rel_by_model, eta_by_model;
    for (const auto& rec : records) {
        ErrorMetrics m = error_metrics(rec.predicted, rec.actual);
        record_rows.push_back({{"experiment_id", rec.experiment_id},
                               {"model", rec.model_name},
                               {"predicted", rec.predicted},
                               {"actual", rec.actual},
                               {"abs_err", m.abs_err},
                               {"rel_err", m.rel_err},
                               {"eta", m.eta}});
        csv << rec.experiment_id << ',' << rec.model_name << ',' << csv_double(rec.predicted)
            << ',' << rec.actual << ',' << csv_double(m.abs_err) << ',' << csv_double(m.rel_err)
            << ',' << csv_double(m.eta) << '\n';
        abs_by_model[rec.model_name].push_back(m.abs_err);
        rel_by_model[rec.model_name].push_back(m.rel_err);
        eta_by_model[rec.model_name].push_back(m.eta);
    }

    json by_model = json::array();
    for (auto& [model, abs_errs] : abs_by_model) {
        auto rels = rel_by_model[model];
        auto etas = eta_by_model[model];
        std::sort(abs_errs.begin(), abs_errs.end());
        std::sort(rels.begin(), rels.end());
        double eta_sum = 0.0;
        for (double e : etas) eta_sum += e;
        by_model.push_back({{"model", model},
                            {"n", abs_errs.size()},
                            {"median_abs_err", quantile_sorted(abs_errs, 0.5)},
                            {"q1_abs_err", quantile_sorted(abs_errs, 0.25)},
                            {"q3_abs_err", quantile_sorted(abs_errs, 0.75)},
                            {"median_rel_err", quantile_sorted(rels, 0.5)},
                            {"q1_rel_err", quantile_sorted(rels, 0.25)},
                            {"q3_rel_err", quantile_sorted(rels, 0.75)},
                            {"mean_eta", etas.empty() ? 0.0 : eta_sum / etas.size()}});
    }

    json topk = json::object();
    std::ostringstream topk_csv;
    topk_csv << "model,k,count\n";
    if (!records.empty()) {
        std::set<std::string> model_set;
        for (const auto& rec : records) model_set.insert(rec.model_name);
        auto counts = topk_ranking(records, static_cast<int>(model_set.size()));
        for (const auto& [model, row] : counts) {
            topk[model] = row;
            for (std::size_t k = 0; k < row.size(); ++k) {
                topk_csv << model << ',' << (k + 1) << ',' << row[k] << '\n';
            }
        }
    }

    json report{{"config", echo_config(cfg)},
                {"records", record_rows},
                {"failures", failures},
                {"aggregates", {{"models", by_model}, {"topk", topk}}}};
    if (!out_dir.empty()) {
        write_text_file(out_dir / "per_replication.csv", csv.str());
        write_text_file(out_dir / "topk.csv", topk_csv.str());
    }
    return report;
}

json run_plan_task(const BenchmarkConfig& cfg, const std::filesystem::path& out_dir,
                   int threads) {
    std::vector<PlanRep> reps(static_cast<std::size_t>(cfg.replications));
    parallel_for(cfg.replications, threads, [&](long long i) {
        auto& slot = reps[static_cast<std::size_t>(i)];
        try {
            slot = run_plan_rep(cfg, i);
        } catch (const std::exception& e) {
            slot = PlanRep{};
            slot.experiment_id = cfg.name + "-r" + std::to_string(i);
            slot.error = e.what();
        }
    });

    json record_rows = json::array();
    json failures = json::array();
    std::ostringstream csv;
    csv << "experiment_id,tail_gamma,target_mult,n_train,target_m,true_dm,method,"
           "lower,upper,point,censored_upper,covered,length\n";

    struct Key {
        double gamma;
        double mult;
        std::string method;
        bool operator<(const Key& o) const {
            return std::tie(gamma, mult, method) < std::tie(o.gamma, o.mult, o.method);
        }
    };
    struct Cell {
        long long n = 0;
        long long covered = 0;
        long long censored = 0;
        std::vector<double> lengths;  // finite upper only
    };
    std::map<Key, Cell> cells;
    struct PairKey {
        double gamma;
        double mult;
        bool operator<(const PairKey& o) const {
            return std::tie(gamma, mult) < std::tie(o.gamma, o.mult);
        }
    };
    struct PairCell {
        long long n = 0;
        long long inversion_ge = 0;
    };
    std::map<PairKey, PairCell> pairs;

    for (const auto& r : reps) {
        if (r.error) {
            failures.push_back({{"experiment_id", r.experiment_id}, {"error", *r.error}});
            continue;
        }
        std::map<double, std::pair<std::optional<double>, std::optional<double>>> len_by_mult;
        for (const auto& row : r.rows) {
            const bool censored = !row.upper.has_value();
            const bool covered =
                row.lower <= row.true_dm && (censored || row.true_dm <= *row.upper);
            const double length =
                censored ? std::numeric_limits<double>::infinity()
                         : static_cast<double>(*row.upper - row.lower);
            record_rows.push_back(
                {{"experiment_id", r.experiment_id},
                 {"tail_gamma", r.gamma_true},
                 {"target_mult", row.target_mult},
                 {"n_train", r.n_train},
                 {"target_m", row.target_m},
                 {"true_dm", row.true_dm},
                 {"method", row.method},
                 {"lower", row.lower},
                 {"upper", censored ? json(nullptr) : json(*row.upper)},
                 {"point", row.point ? json(*row.point) : json(nullptr)},
                 {"censored_upper", censored},
                 {"covered", covered}});
            csv << r.experiment_id << ',' << csv_double(r.gamma_true) << ','
                << csv_double(row.target_mult) << ',' << r.n_train << ',' << row.target_m << ','
                << row.true_dm << ',' << row.method << ',' << row.lower << ','
                << (censored ? std::string("") : std::to_string(*row.upper)) << ','
                << (row.point ? std::to_string(*row.point) : std::string("")) << ','
                << (censored ? 1 : 0) << ',' << (covered ? 1 : 0) << ','
                << (censored ? std::string("") : csv_double(length)) << '\n';

            Cell& cell = cells[{r.gamma_true, row.target_mult, row.method}];
            ++cell.n;
            if (covered) ++cell.covered;
            if (censored) {
                ++cell.censored;
            } else {
                cell.lengths.push_back(length);
            }
            auto& slot = len_by_mult[row.target_mult];
            if (row.method == "posterior") slot.first = length;
            if (row.method == "inversion") slot.second = length;
        }
        for (const auto& [mult, lens] : len_by_mult) {
            if (lens.first && lens.second) {
                PairCell& pc = pairs[{r.gamma_true, mult}];
                ++pc.n;
                if (*lens.second >= *lens.first) ++pc.inversion_ge;
            }
        }
    }

    json plan_rows = json::array();
    for (auto& [key, cell] : cells) {
        std::sort(cell.lengths.begin(), cell.lengths.end());
        double mean_len = 0.0;
        for (double v : cell.lengths) mean_len += v;
        if (!cell.lengths.empty()) mean_len /= static_cast<double>(cell.lengths.size());
        plan_rows.push_back({{"tail_gamma", key.gamma},
                             {"target_mult", key.mult},
                             {"method", key.method},
                             {"n", cell.n},
                             {"coverage", cell.n ? static_cast<double>(cell.covered) / cell.n : 0.0},
                             {"censored_upper", cell.censored},
                             {"mean_length", mean_len},
                             {"median_length", quantile_sorted(cell.lengths, 0.5)}});
    }
    json paired_rows = json::array();
    for (const auto& [key, pc] : pairs) {
        paired_rows.push_back(
            {{"tail_gamma", key.gamma},
             {"target_mult", key.mult},
             {"n_pairs", pc.n},
             {"frac_inversion_ge_posterior",
              pc.n ? static_cast<double>(pc.inversion_ge) / pc.n : 0.0}});
    }

    json report{{"config", echo_config(cfg)},
                {"records", record_rows},
                {"failures", failures},
                {"aggregates", {{"plan", plan_rows}, {"paired", paired_rows}}}};
    if (!out_dir.empty()) {
        write_text_file(out_dir / "per_replication.csv", csv.str());
    }
    return report;
}

}  // namespace

ErrorMetrics error_metrics(double predicted, long long actual) {
    if (actual < 1) {
        throw std::invalid_argument("error metrics need a positive actual count");
    }
    ErrorMetrics m;
    m.abs_err = std::abs(predicted - static_cast<double>(actual));
    m.rel_err = m.abs_err / static_cast<double>(actual);
    m.eta = 1.0 - std::min(m.rel_err, 1.0);
    return m;
}

std::map<std::string, std::vector<long long>> topk_ranking(
    const std::vector<PredictionRecord>& records, int k_max) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    std::map<std::string, std::vector<std::pair<std::string, double>>> by_experiment;
    for (const auto& rec : records) {
        ErrorMetrics m = error_metrics(rec.predicted, rec.actual);
        by_experiment[rec.experiment_id].emplace_back(rec.model_name, m.abs_err);
    }
    if (by_experiment.empty()) return {};

    std::set<std::string> model_set;
    for (const auto& [eid, entries] : by_experiment) {
        std::set<std::string> here;
        for (const auto& [model, err] : entries) {
            if (!here.insert(model).second) {
                throw std::invalid_argument("duplicate model \"" + model + "\" in experiment " + eid);
            }
        }
        if (model_set.empty()) {
            model_set = std::move(here);
        } else if (here != model_set) {
            throw std::invalid_argument("experiment " + eid + " has an inconsistent model set");
        }
    }
    if (k_max > static_cast<int>(model_set.size())) {
        throw std::invalid_argument("k_max exceeds the number of models");
    }

    std::map<std::string, std::vector<long long>> counts;
    for (const auto& model : model_set) {
        counts[model].assign(static_cast<std::size_t>(k_max), 0);
    }
    for (auto& [eid, entries] : by_experiment) {
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) {
                      return std::tie(a.second, a.first) < std::tie(b.second, b.first);
                  });
        for (int rank = 0; rank < k_max; ++rank) {
            auto& row = counts[entries[static_cast<std::size_t>(rank)].first];
            for (int k = rank; k < k_max; ++k) row[static_cast<std::size_t>(k)] += 1;
        }
    }
    return counts;
}

BenchmarkResult run_benchmark_json(const std::string& config_json,
                                   const std::filesystem::path& out_dir,
                                   std::optional<std::uint64_t> seed_override, int threads) {
    json parsed;
    try {
        parsed = json::parse(config_json);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    BenchmarkConfig cfg = parse_config(parsed);
    if (seed_override) cfg.seed = *seed_override;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    json report = cfg.task == "predict" ? run_predict_task(cfg, out_dir, threads)
                                        : run_plan_task(cfg, out_dir, threads);
    std::string text = report.dump(2);
    text.push_back('\n');
    if (!out_dir.empty()) write_text_file(out_dir / "report.json", text);
    return {std::move(text)};
}

BenchmarkResult run_benchmark_file(const std::filesystem::path& config_path,
                                   const std::filesystem::path& out_dir,
                                   std::optional<std::uint64_t> seed_override, int threads) {
    std::ifstream in(config_path);
    if (!in) throw parse_error("cannot open " + config_path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_benchmark_json(ss.str(), out_dir, seed_override, threads);
}

}  // namespace sbsp
