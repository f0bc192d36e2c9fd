// End-to-end acceptance gate.  Each criterion prints one PASS/FAIL line with
// the measured quantities and its pinned tolerance; the exit code is the
// number of failed criteria.  Reference quantities are recomputed here from
// first principles (long double, independent code paths) wherever the
// criterion is an external identity rather than an internal consistency
// check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"
#include "sbsp/data_model.hpp"
#include "sbsp/evaluation.hpp"
#include "sbsp/generators.hpp"
#include "sbsp/models.hpp"
#include "sbsp/planning.hpp"
#include "sbsp/rng.hpp"

using namespace sbsp;
using nlohmann::json;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "sbsp-acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// ---------------------------------------------------------------------------
// independent long-double reference pieces

long double log_beta_ref(long double a, long double b) {
    return lgammal(a) + lgammal(b) - lgammal(a + b);
}

// gamma_ref[j] = alpha * sum_{i=1}^{j} B(1 - alpha, i), j = 0..d.
std::vector<long double> gamma_prefix_ref(long double alpha, long long d) {
    std::vector<long double> g(static_cast<std::size_t>(d) + 1, 0.0L);
    for (long long j = 1; j <= d; ++j) {
        g[static_cast<std::size_t>(j)] =
            g[static_cast<std::size_t>(j - 1)] +
            alpha * expl(log_beta_ref(1.0L - alpha, static_cast<long double>(j)));
    }
    return g;
}

long double negbin_log_pmf_ref(long long k, long double r, long double p) {
    return lgammal(static_cast<long double>(k) + r) - lgammal(r) -
           lgammal(static_cast<long double>(k) + 1.0L) + r * logl(p) +
           static_cast<long double>(k) * logl(1.0L - p);
}

// TV distance between an empirical histogram (counts over 0..K) and a pmf;
// the pmf mass beyond K enters as unmatched tail.
double tv_against_pmf(const std::vector<long long>& hist, long long n_draws,
                      const std::function<long double(long long)>& pmf) {
    long double acc = 0.0L, cum = 0.0L;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        long double pk = pmf(static_cast<long long>(k));
        cum += pk;
        acc += fabsl(static_cast<long double>(hist[k]) / n_draws - pk);
    }
    acc += std::max(0.0L, 1.0L - cum);
    return static_cast<double>(acc / 2.0L);
}

void record_count(std::vector<long long>& hist, long long k) {
    if (k >= static_cast<long long>(hist.size())) hist.resize(static_cast<std::size_t>(k) + 1, 0);
    ++hist[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------
// criterion 1: the closed-form marginal equals the product of one-day
// transition probabilities of the sequential scheme (day batch sizes are
// negative binomial, seen users flip Bernoulli((M_i - alpha)/(j - alpha))).

// Log probability of a fixed panel under the sequential scheme.  The k_j!
// ways of matching the day's unlabeled batch to the panel's labeled users
// cancel the 1/k_j! inside the negative binomial pmf, leaving
// Gamma(k+r)/Gamma(r) p^r (1-p)^k per day.
long double sequential_log_prob(long long d, const std::vector<unsigned>& masks,
                                const HyperParams& h) {
    const long double alpha = h.alpha, c = h.c, beta = h.beta;
    const auto g = gamma_prefix_ref(alpha, d);
    struct User {
        unsigned mask;
        long long first_day;
        long long m = 0;
    };
    std::vector<User> users;
    for (unsigned mask : masks) {
        long long first = 1;
        while (!(mask >> (first - 1) & 1u)) ++first;
        users.push_back({mask, first, 0});
    }
    long double lp = 0.0L;
    long long n_seen = 0;
    for (long long j = 1; j <= d; ++j) {
        long long k = 0;
        for (auto& u : users) {
            if (u.first_day < j) {
                const bool active = (u.mask >> (j - 1)) & 1u;
                const long double par =
                    (static_cast<long double>(u.m) - alpha) / (static_cast<long double>(j) - alpha);
                lp += active ? logl(par) : logl(1.0L - par);
                if (active) ++u.m;
            } else if (u.first_day == j) {
                ++k;
            }
        }
        const long double r = static_cast<long double>(n_seen) + c + 1.0L;
        const auto jd = static_cast<std::size_t>(j);
        lp += lgammal(static_cast<long double>(k) + r) - lgammal(r);
        lp += r * (logl(beta + g[jd - 1]) - logl(beta + g[jd]));
        if (k > 0) lp += static_cast<long double>(k) * (logl(g[jd] - g[jd - 1]) - logl(beta + g[jd]));
        n_seen += k;
        for (auto& u : users) {
            if (u.first_day == j) u.m = 1;
        }
    }
    return lp;
}

Check criterion_marginal_chain_rule() {
    constexpr double kTol = 1e-8;
    const std::vector<HyperParams> hypers = {
        {0.5, 1.0, 1.0}, {0.3, 2.5, 0.7}, {0.85, 0.2, 3.0}};

    long double worst = 0.0L;
    long long n_panels = 0;
    for (long long d = 1; d <= 3; ++d) {
        std::vector<std::vector<unsigned>> panels;
        panels.push_back({});  // no users at all
        const unsigned top = (1u << d) - 1u;
        for (unsigned m = 1; m <= top; ++m) panels.push_back({m});
        for (unsigned m1 = 1; m1 <= top; ++m1) {
            for (unsigned m2 = m1; m2 <= top; ++m2) panels.push_back({m1, m2});
        }
        for (const auto& masks : panels) {
            ActivityMatrix am;
            am.d = d;
            for (std::size_t i = 0; i < masks.size(); ++i) {
                std::vector<long long> days;
                for (long long day = 1; day <= d; ++day) {
                    if ((masks[i] >> (day - 1)) & 1u) days.push_back(day);
                }
                am.users.push_back({"u" + std::to_string(i + 1), std::move(days)});
            }
            const SufficientStats stats = to_stats(am);
            for (const auto& h : hypers) {
                const long double lm = log_marginal_bernoulli(stats, h);
                const long double seq = sequential_log_prob(d, masks, h);
                worst = std::max(worst, fabsl(expm1l(lm - seq)));
                ++n_panels;
            }
        }
    }
    Check out{"marginal equals sequential scheme product", worst < kTol, ""};
    out.detail = "max rel err " + fmt(static_cast<double>(worst)) + " over " +
                 std::to_string(n_panels) + " panel/hyper pairs (tol " + fmt(kTol) + ")";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 2: the simulated prior user count over d days follows
// NegBin(c+1, beta/(beta+gamma_d)), and drawing N_d then the predictive count
// over D more days reproduces the prior law over d+D days.

Check criterion_prior_predictive_laws() {
    constexpr double kTol = 0.02;
    constexpr long long kDraws = 100000;
    const HyperParams h{0.5, 1.0, 1.0};
    const long long d = 3, horizon = 4;

    const auto g = gamma_prefix_ref(h.alpha, d + horizon);
    const long double p_d = h.beta / (h.beta + g[static_cast<std::size_t>(d)]);
    const long double p_full = h.beta / (h.beta + g[static_cast<std::size_t>(d + horizon)]);
    const long double r = h.c + 1.0L;

    RngStream rng(20260819, 2);
    std::vector<long long> hist_d, hist_two_stage, hist_full;
    for (long long i = 0; i < kDraws; ++i) {
        TriggerData t = generate_geometric_prior(h, d, rng);
        record_count(hist_d, t.n_users());
        PosteriorState post = posterior(to_stats(t), h);
        const long long extra = sample_negbin(predict_new_users_law(post, horizon), rng);
        record_count(hist_two_stage, t.n_users() + extra);
        record_count(hist_full, generate_geometric_prior(h, d + horizon, rng).n_users());
    }
    const double tv_d = tv_against_pmf(hist_d, kDraws,
                                       [&](long long k) { return expl(negbin_log_pmf_ref(k, r, p_d)); });
    const double tv_two_stage = tv_against_pmf(
        hist_two_stage, kDraws, [&](long long k) { return expl(negbin_log_pmf_ref(k, r, p_full)); });
    const double tv_direct = tv_against_pmf(
        hist_full, kDraws, [&](long long k) { return expl(negbin_log_pmf_ref(k, r, p_full)); });

    Check out{"prior count law and two-stage composition",
              tv_d < kTol && tv_two_stage < kTol && tv_direct < kTol, ""};
    out.detail = "TV prior@" + std::to_string(d) + " " + fmt(tv_d) + ", two-stage@" +
                 std::to_string(d + horizon) + " " + fmt(tv_two_stage) + ", direct@" +
                 std::to_string(d + horizon) + " " + fmt(tv_direct) + " (tol " + fmt(kTol) +
                 ", 1e5 draws)";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 3: the jump-by-jump path sampler and the closed-form batch law
// agree on the number of triggers landing in the next D_up days.

Check criterion_sampler_equivalence() {
    constexpr double kTol = 0.03;
    constexpr long long kDraws = 10000;
    const HyperParams h{0.3, 1.0, 1.0};
    SufficientStats stats;
    stats.kind = ModelKind::geometric;
    stats.d = 7;
    stats.counts = {1, 2, 3, 5, 7};
    const PosteriorState post = posterior(stats, h);
    const long long d_up = 14;
    const NegBinLaw k_law = predict_new_users_law(post, d_up);

    const TruncationRule rule{d_up, 1e-4, 1000000};
    RngStream rng(20260819, 3);
    std::vector<long long> hist;
    for (long long i = 0; i < kDraws; ++i) {
        const FergusonKlassDraw draw = ferguson_klass_new_measure(post, rule, rng);
        long long in_window = 0;
        for (long long day : draw.trigger_days) {
            if (day <= stats.d + d_up) ++in_window;
        }
        record_count(hist, in_window);
    }
    const double tv = tv_against_pmf(
        hist, kDraws, [&](long long k) { return expl(static_cast<long double>(k_law.log_pmf(k))); });

    Check out{"jump-path sampler matches batch count law", tv < kTol, ""};
    out.detail = "TV " + fmt(tv) + " (tol " + fmt(kTol) + ", 1e4 draws, window " +
                 std::to_string(d_up) + "d)";
    return out;
}

// ---------------------------------------------------------------------------
// criteria 4 and 5: benchmark accuracy on the two synthetic panel generators.

json run_benchmark(const json& cfg, const fs::path& out_dir = {}) {
    return json::parse(run_benchmark_json(cfg.dump(), out_dir).report_json);
}

const json* find_model_row(const json& report, const std::string& model) {
    for (const auto& row : report.at("aggregates").at("models")) {
        if (row.at("model").get<std::string>() == model) return &row;
    }
    return nullptr;
}

Check criterion_dense_panel_benchmark() {
    constexpr double kMedianRelTol = 0.15;
    const json cfg{{"name", "dense-panel"},
                   {"task", "predict"},
                   {"seed", 4101},
                   {"replications", 50},
                   {"train_days", 14},
                   {"horizon", 14},
                   {"models", {"bm", "gm", "oracle"}},
                   {"generator",
                    {{"kind", "dg1"}, {"c", 2500.0}, {"beta", 0.5}, {"alpha_beta", {4.0, 10.0}}}}};
    const json report = run_benchmark(cfg);
    const bool clean = report.at("failures").empty();
    const json* bm = find_model_row(report, "bm");
    const json* oracle = find_model_row(report, "oracle");
    if (!clean || bm == nullptr || oracle == nullptr) {
        return {"dense-panel accuracy", false, "replication failures or missing model rows"};
    }
    const double bm_rel = bm->at("median_rel_err").get<double>();
    const double bm_abs = bm->at("median_abs_err").get<double>();
    const double oracle_abs = oracle->at("median_abs_err").get<double>();

    Check out{"dense-panel accuracy", bm_rel <= kMedianRelTol && oracle_abs <= bm_abs, ""};
    out.detail = "bm median rel err " + fmt(bm_rel) + " (tol " + fmt(kMedianRelTol) +
                 "), oracle median abs " + fmt(oracle_abs) + " <= bm " + fmt(bm_abs) + " over 50 reps";
    return out;
}

Check criterion_sparse_panel_benchmark() {
    constexpr double kWinFracTol = 0.60;
    const json cfg{{"name", "sparse-panel"},
                   {"task", "predict"},
                   {"seed", 4102},
                   {"replications", 50},
                   {"train_days", 14},
                   {"horizon", 14},
                   {"models", {"bm", "gm"}},
                   {"generator",
                    {{"kind", "dg2"}, {"c", 2500.0}, {"beta", 0.5}, {"alpha_beta", {4.0, 10.0}}}}};
    const json report = run_benchmark(cfg);
    if (!report.at("failures").empty()) {
        return {"sparse-panel model ordering", false, "replication failures"};
    }
    std::map<std::string, std::map<std::string, double>> rel_by_exp;
    for (const auto& rec : report.at("records")) {
        rel_by_exp[rec.at("experiment_id").get<std::string>()]
                  [rec.at("model").get<std::string>()] = rec.at("rel_err").get<double>();
    }
    long long wins = 0, total = 0;
    for (const auto& [id, by_model] : rel_by_exp) {
        ++total;
        if (by_model.at("gm") < by_model.at("bm")) ++wins;
    }
    const double frac = total ? static_cast<double>(wins) / total : 0.0;
    Check out{"sparse-panel model ordering", total == 50 && frac >= kWinFracTol, ""};
    out.detail = "gm beats bm in " + std::to_string(wins) + "/" + std::to_string(total) +
                 " reps (" + fmt(frac) + ", need >= " + fmt(kWinFracTol) + ")";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 6: days-to-target interval calibration on heavy-tailed panels.

Check criterion_interval_calibration() {
    constexpr double kCovLo = 0.88, kCovHi = 0.99, kPairTol = 0.90;
    const json cfg{{"name", "calib"},
                   {"task", "plan"},
                   {"seed", 4201},
                   {"replications", 400},
                   {"train_days", 14},
                   {"generator", {{"kind", "zipf"}, {"pool", 1000000}, {"gammas", {0.8, 1.0}}}},
                   {"target_mults", {1.5}},
                   {"level", 0.95},
                   {"k_mc", 1000},
                   {"band_q", 1000}};
    const json report = run_benchmark(cfg);
    if (!report.at("failures").empty()) {
        return {"days-to-target calibration", false,
                std::to_string(report.at("failures").size()) + " replication failures"};
    }
    std::map<std::pair<double, std::string>, const json*> rows;
    for (const auto& row : report.at("aggregates").at("plan")) {
        rows[{row.at("tail_gamma").get<double>(), row.at("method").get<std::string>()}] = &row;
    }
    std::map<double, double> paired;
    for (const auto& row : report.at("aggregates").at("paired")) {
        paired[row.at("tail_gamma").get<double>()] =
            row.at("frac_inversion_ge_posterior").get<double>();
    }

    bool pass = true;
    std::string detail;
    for (double gamma : {0.8, 1.0}) {
        const json* post_row = rows.count({gamma, "posterior"}) ? rows[{gamma, "posterior"}] : nullptr;
        const json* inv_row = rows.count({gamma, "inversion"}) ? rows[{gamma, "inversion"}] : nullptr;
        if (post_row == nullptr || inv_row == nullptr || !paired.count(gamma)) {
            return {"days-to-target calibration", false, "missing aggregate rows"};
        }
        const double post_cov = post_row->at("coverage").get<double>();
        const double inv_cov = inv_row->at("coverage").get<double>();
        const double frac = paired[gamma];
        pass = pass && post_cov >= kCovLo && post_cov <= kCovHi && inv_cov >= post_cov &&
               frac >= kPairTol;
        if (!detail.empty()) detail += "; ";
        detail += "gamma " + fmt(gamma) + ": post cov " + fmt(post_cov) + ", inv cov " +
                  fmt(inv_cov) + ", inv>=post len " + fmt(frac);
    }
    detail += " (cov in [" + fmt(kCovLo) + "," + fmt(kCovHi) + "], frac >= " + fmt(kPairTol) +
              ", 200 reps/gamma)";
    return {"days-to-target calibration", pass, detail};
}

// ---------------------------------------------------------------------------
// criterion 7: cost ordering of the two interval methods as the stability
// index grows.  The Monte Carlo posterior interval must get markedly more
// expensive at alpha = 0.75 than at 0.25 (the predicted batches are far
// larger), while the band inversion runs on a fixed horizon/tuple budget and
// must stay near-flat.

Check criterion_interval_cost_ordering() {
    constexpr double kPosteriorRatioMin = 3.0;
    constexpr double kInversionRatioMax = 2.0;
    constexpr int kRepeats = 5;
    constexpr long long kMc = 1000, kBandQ = 4000;

    struct Case {
        double alpha;
        PosteriorState post;
        long long target = 0;
        long long d_hat = 0;
    };
    std::vector<Case> cases;
    for (double alpha : {0.25, 0.75}) {
        const HyperParams h{alpha, 1000.0, 0.5};
        RngStream gen(4301, alpha < 0.5 ? 1 : 2);
        const ActivityMatrix panel = generate_dg2(h, 7, gen);
        const SufficientStats stats = to_stats_geometric(panel);
        Case cs{alpha, posterior(stats, h), 2 * stats.n_users(), 0};
        cs.d_hat = point_estimate_dm(cs.post, cs.target, 36500).value_or(36500);
        cases.push_back(std::move(cs));
    }
    const long long common_horizon = 3 * std::max(cases[0].d_hat, cases[1].d_hat);

    std::map<double, double> t_post, t_inv;
    long long sink = 0;  // keeps the timed results observable
    for (const auto& cs : cases) {
        std::vector<double> post_secs, inv_secs;
        for (int rep = -1; rep < kRepeats; ++rep) {  // rep -1 warms up, untimed
            RngStream rng(510 + rep, cs.alpha < 0.5 ? 1 : 2);
            const auto t0 = clock_type::now();
            const PosteriorDmResult res = posterior_dm(cs.post, cs.target, kMc, 0.95, rng);
            const auto t1 = clock_type::now();
            sink += res.interval.lower;
            if (rep >= 0) post_secs.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        for (int rep = -1; rep < kRepeats; ++rep) {
            RngStream rng(610 + rep, cs.alpha < 0.5 ? 1 : 2);
            const auto t0 = clock_type::now();
            const CredibleBand band = global_band(cs.post, 0.95, common_horizon, kBandQ, rng);
            const DmInterval interval = invert_band(band, cs.target);
            const auto t1 = clock_type::now();
            sink += interval.lower;
            if (rep >= 0) inv_secs.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        t_post[cs.alpha] = median_of(post_secs);
        t_inv[cs.alpha] = median_of(inv_secs);
    }

    const double post_ratio = t_post[0.75] / t_post[0.25];
    const double inv_ratio = std::max(t_inv[0.75], t_inv[0.25]) / std::min(t_inv[0.75], t_inv[0.25]);
    Check out{"interval cost ordering",
              post_ratio >= kPosteriorRatioMin && inv_ratio < kInversionRatioMax && sink >= 0, ""};
    out.detail = "posterior " + fmt(t_post[0.25]) + "s -> " + fmt(t_post[0.75]) + "s (ratio " +
                 fmt(post_ratio) + ", need >= " + fmt(kPosteriorRatioMin) + "); inversion " +
                 fmt(t_inv[0.25]) + "s vs " + fmt(t_inv[0.75]) + "s (ratio " + fmt(inv_ratio) +
                 ", need < " + fmt(kInversionRatioMax) + ")";
    return out;
}

// ---------------------------------------------------------------------------
// criterion 8: the benchmark harness runs a 20-experiment synthetic fleet
// with all built-in models plus an external prediction file, deterministically.

Check criterion_fleet_benchmark() {
    const json base{{"name", "fleet"},
                    {"task", "predict"},
                    {"seed", 4401},
                    {"replications", 20},
                    {"train_days", 14},
                    {"horizon", 14},
                    {"models", {"gm", "bm", "ibp"}},
                    {"generator", {{"kind", "zipf"}, {"pool", 100000}, {"gammas", {0.8, 1.0}}}}};
    const fs::path root = work_dir() / "fleet";
    fs::create_directories(root);
    const json first = run_benchmark(base, root / "a");
    if (!first.at("failures").empty()) {
        return {"fleet benchmark with external slot", false, "replication failures"};
    }
    std::set<std::string> ids;
    for (const auto& rec : first.at("records")) {
        ids.insert(rec.at("experiment_id").get<std::string>());
    }
    const fs::path ext_path = root / "external.csv";
    {
        std::ofstream ext(ext_path);
        ext << "experiment_id,model_name,predicted_new_users\n";
        for (const auto& id : ids) {
            const long long rep = std::stoll(id.substr(id.rfind("-r") + 2));
            ext << id << ",ext," << (10 + 3 * rep) << "\n";
        }
    }
    json cfg = base;
    cfg["external_predictions"] = ext_path.string();
    const auto run_to = [&](const fs::path& dir) {
        fs::create_directories(dir);
        return run_benchmark_json(cfg.dump(), dir).report_json;
    };
    const std::string rep_b = run_to(root / "b");
    const std::string rep_c = run_to(root / "c");

    auto file_text = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool files_equal = true;
    for (const char* name : {"report.json", "per_replication.csv", "topk.csv"}) {
        files_equal = files_equal && file_text(root / "b" / name) == file_text(root / "c" / name);
    }

    const json report = json::parse(rep_b);
    const json& topk = report.at("aggregates").at("topk");
    bool topk_ok = topk.size() == 4;
    for (const char* model : {"gm", "bm", "ibp", "ext"}) {
        topk_ok = topk_ok && topk.contains(model) && topk.at(model).size() == 4 &&
                  topk.at(model).back().get<long long>() == 20;
    }

    Check out{"fleet benchmark with external slot",
              ids.size() == 20 && rep_b == rep_c && files_equal && topk_ok, ""};
    out.detail = std::to_string(ids.size()) + " experiments, 4-model top-k " +
                 std::string(topk_ok ? "complete" : "BROKEN") + ", reruns " +
                 (rep_b == rep_c && files_equal ? "byte-identical" : "DIFFER");
    return out;
}

// ---------------------------------------------------------------------------
// criterion 9: the unit/property suite itself, green and under its budget.

Check criterion_property_suite() {
    constexpr double kBudgetSeconds = 600.0;
    const fs::path log = work_dir() / "unit_suite.log";
    const std::string cmd = std::string("\"") + SBSP_TESTS_PATH + "\" > \"" + log.string() + "\" 2>&1";
    const auto t0 = clock_type::now();
    const int rc = std::system(cmd.c_str());
    const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
    const bool clean_exit = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;

    Check out{"unit and property suite", clean_exit && secs < kBudgetSeconds, ""};
    out.detail = std::string(clean_exit ? "exit 0" : "nonzero exit") + " in " + fmt(secs) +
                 "s (budget " + fmt(kBudgetSeconds) + "s, log " + log.string() + ")";
    return out;
}

}  // namespace

int main() {
    std::vector<std::function<Check()>> criteria = {
        criterion_marginal_chain_rule,    criterion_prior_predictive_laws,
        criterion_sampler_equivalence,    criterion_dense_panel_benchmark,
        criterion_sparse_panel_benchmark, criterion_interval_calibration,
        criterion_interval_cost_ordering, criterion_fleet_benchmark,
        criterion_property_suite,
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        const auto t0 = clock_type::now();
        try {
            check = criteria[i]();
        } catch (const std::exception& e) {
            check.name = "criterion " + std::to_string(i + 1);
            check.pass = false;
            check.detail = std::string("exception: ") + e.what();
        }
        check.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
        if (!check.pass) ++failed;
        std::printf("[%zu/%zu] %s  %-42s %s  [%.1fs]\n", i + 1, criteria.size(),
                    check.pass ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str(),
                    check.seconds);
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed;
}
