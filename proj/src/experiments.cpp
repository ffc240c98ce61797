#include "qcd/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace qcd {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_key(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::int64_t default_max_len(double alpha) {
    return static_cast<std::int64_t>(std::ceil(50.0 / alpha));
}

Seed calibration_seed(const ExperimentConfig& cfg, const DetectorModel& base, const char* mode,
                      double alpha, const Distribution& nu0) {
    DetectorModel keyed = base;
    keyed.spec.eta = 0.0;
    return derive(cfg.seed, std::string("calibrate|") + mode + "|" + describe(keyed) +
                                "|alpha=" + fmt(alpha) + "|nu0=" + nu0.describe());
}

CalibrationOptions far_options(const ExperimentConfig& cfg, const DetectorModel& base,
                               const Distribution& nu0) {
    CalibrationOptions opt;
    opt.mode = CalibrationMode::far;
    opt.alpha = cfg.alpha;
    opt.initial_runs = cfg.cal_initial_runs;
    opt.iter_run_cap = cfg.cal_iter_cap;
    opt.total_run_cap = cfg.cal_total_cap;
    opt.threads = cfg.threads;
    opt.seed = calibration_seed(cfg, base, "far", cfg.alpha, nu0);
    return opt;
}

void record_calibration(ResultTable& t, const std::string& name, const CalibrationResult& cal) {
    t.metadata["eta." + name] = fmt(cal.eta);
    t.metadata["achieved." + name + ".value"] = fmt(cal.achieved.value);
    t.metadata["achieved." + name + ".stderr"] = fmt(cal.achieved.std_error);
    t.metadata["achieved." + name + ".n_runs"] = std::to_string(cal.achieved.n_runs);
    t.metadata["calibration." + name + ".total_runs"] = std::to_string(cal.total_runs);
}

void push_cell(ResultTable& t, const std::string& row, const std::string& col,
               const EstimateWithError& est) {
    t.cells.push_back(CellResult{row, col, est, ""});
}

void push_error(ResultTable& t, const std::string& row, const std::string& col,
                const std::string& what) {
    CellResult c;
    c.row = row;
    c.column = col;
    c.error = what;
    t.cells.push_back(c);
}

// ---------------------------------------------------------------------------
// table1: gaussian mean shift, optimal/robust cusum and GLR delays

ResultTable run_table1(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "table1";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;

    const auto thetas = cfg.raw.get_double_list("table1.thetas", {0.1, 0.2, 0.4, 0.6, 1.0});
    const double band_lo = cfg.raw.get_double("table1.theta_lo", 0.1);
    const double band_hi = cfg.raw.get_double("table1.theta_hi", 3.0);
    const std::int64_t window = cfg.raw.get_int("table1.glr_window", 2000);
    const auto lambda_grid = cfg.raw.get_int_list("table1.glr_lambda_grid", {1, 10, 100, 1000});

    const Distribution nu0 = Distribution::gaussian(0.0, 1.0);
    const LfdPair lfd = solve_lfd(UncertaintyClass::singleton(nu0),
                                  UncertaintyClass::gaussian_mean_band(band_lo, band_hi, 1.0));

    t.col_keys = {"optimal_cusum", "robust_cusum", "glr"};
    for (double th : thetas) t.row_keys.push_back(fmt_key(th));
    t.metadata["lfd.nu0_bar"] = lfd.nu0_bar.describe();
    t.metadata["lfd.nu1_under"] = lfd.nu1_under.describe();
    t.metadata["glr.window"] = std::to_string(window);
    if (cfg.runs_per_cell == 0) return t;

    const std::int64_t max_len = default_max_len(cfg.alpha);

    DetectorModel robust;
    robust.spec.family = DetectorFamily::cusum;
    robust.llr = lfd.llr;
    std::optional<CalibrationResult> cal_robust;
    std::string robust_error;
    try {
        cal_robust = calibrate_threshold(robust, lfd.nu0_bar, far_options(cfg, robust, lfd.nu0_bar));
        robust.spec.eta = cal_robust->eta;
        record_calibration(t, "robust_cusum", *cal_robust);
    } catch (const std::exception& e) {
        robust_error = e.what();
    }

    DetectorModel glr;
    glr.spec.family = DetectorFamily::glr;
    glr.spec.window = window;
    glr.spec.theta_lo = band_lo;
    glr.spec.theta_hi = band_hi;
    std::optional<CalibrationResult> cal_glr;
    std::string glr_error;
    try {
        cal_glr = calibrate_threshold(glr, nu0, far_options(cfg, glr, nu0));
        glr.spec.eta = cal_glr->eta;
        record_calibration(t, "glr", *cal_glr);
    } catch (const std::exception& e) {
        glr_error = e.what();
    }

    for (double th : thetas) {
        const std::string row = fmt_key(th);
        const Distribution nu1 = Distribution::gaussian(th, 1.0);

        try {
            DetectorModel opt;
            opt.spec.family = DetectorFamily::cusum;
            opt.llr = make_llr(nu0, nu1);
            const CalibrationResult cal = calibrate_threshold(opt, nu0, far_options(cfg, opt, nu0));
            opt.spec.eta = cal.eta;
            record_calibration(t, "optimal_cusum." + row, cal);
            push_cell(t, row, "optimal_cusum",
                      estimate_wdd(opt, nu0, nu1, cfg.runs_per_cell, max_len, cfg.seed,
                                   cfg.threads)
                          .estimate);
        } catch (const std::exception& e) {
            push_error(t, row, "optimal_cusum", e.what());
        }

        if (cal_robust) {
            try {
                push_cell(t, row, "robust_cusum",
                          estimate_wdd(robust, nu0, nu1, cfg.runs_per_cell, max_len, cfg.seed,
                                       cfg.threads)
                              .estimate);
            } catch (const std::exception& e) {
                push_error(t, row, "robust_cusum", e.what());
            }
        } else {
            push_error(t, row, "robust_cusum", robust_error);
        }

        if (cal_glr) {
            try {
                const DelayEstimate d = estimate_wdd(glr, nu0, nu1, cfg.runs_per_cell, max_len,
                                                     cfg.seed, cfg.threads, lambda_grid);
                push_cell(t, row, "glr", d.estimate);
                for (std::size_t j = 0; j < d.lambda_grid.size(); ++j)
                    t.metadata["glr.delay." + row + ".lambda=" +
                               std::to_string(d.lambda_grid[j])] = fmt(d.per_lambda[j].value);
            } catch (const std::exception& e) {
                push_error(t, row, "glr", e.what());
            }
        } else {
            push_error(t, row, "glr", glr_error);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// table2/table3: epsilon-contamination delays

Distribution contaminated(double eps, double mean, double sigma) {
    return Distribution::mixture({1.0 - eps, eps},
                                 {Distribution::gaussian(mean, 1.0),
                                  Distribution::gaussian(mean, sigma)});
}

ResultTable run_table2(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "table2";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;

    const auto epsilons = cfg.raw.get_double_list("table2.epsilons", {0.05, 0.005});
    const auto sigma1s = cfg.raw.get_double_list("table2.sigma1s", {0.1, 0.5, 1, 5, 10});
    const double sigma0 = cfg.raw.get_double("table2.sigma0", 1.0);

    const Distribution p0 = Distribution::gaussian(0.0, 1.0);
    const Distribution p1 = Distribution::gaussian(1.0, 1.0);

    for (double s1 : sigma1s) t.row_keys.push_back(fmt_key(s1));
    for (double eps : epsilons) {
        t.col_keys.push_back("robust_cusum_eps" + fmt_key(eps));
        t.col_keys.push_back("optimal_cusum_eps" + fmt_key(eps));
    }
    if (cfg.runs_per_cell == 0) {
        for (double eps : epsilons) {
            const HuberThresholds th = huber_thresholds(p0, p1, eps);
            t.metadata["huber.a.eps" + fmt_key(eps)] = fmt(th.a);
            t.metadata["huber.b.eps" + fmt_key(eps)] = fmt(th.b);
        }
        return t;
    }

    const std::int64_t max_len = default_max_len(cfg.alpha);

    for (double eps : epsilons) {
        const std::string eps_key = fmt_key(eps);
        std::optional<DetectorModel> robust;
        std::string robust_error;
        try {
            const LfdPair lfd = solve_lfd(UncertaintyClass::eps_contamination(p0, eps),
                                          UncertaintyClass::eps_contamination(p1, eps));
            const HuberThresholds th = huber_thresholds(p0, p1, eps);
            t.metadata["huber.a.eps" + eps_key] = fmt(th.a);
            t.metadata["huber.b.eps" + eps_key] = fmt(th.b);
            DetectorModel m;
            m.spec.family = DetectorFamily::cusum;
            m.llr = lfd.llr;
            const CalibrationResult cal =
                calibrate_threshold(m, lfd.nu0_bar, far_options(cfg, m, lfd.nu0_bar));
            m.spec.eta = cal.eta;
            record_calibration(t, "robust_cusum_eps" + eps_key, cal);
            robust = m;
        } catch (const std::exception& e) {
            robust_error = e.what();
        }

        for (double s1 : sigma1s) {
            const std::string row = fmt_key(s1);
            const Distribution nu0 = contaminated(eps, 0.0, sigma0);
            const Distribution nu1 = contaminated(eps, 1.0, s1);

            if (robust) {
                try {
                    push_cell(t, row, "robust_cusum_eps" + eps_key,
                              estimate_wdd(*robust, nu0, nu1, cfg.runs_per_cell, max_len,
                                           cfg.seed, cfg.threads)
                                  .estimate);
                } catch (const std::exception& e) {
                    push_error(t, row, "robust_cusum_eps" + eps_key, e.what());
                }
            } else {
                push_error(t, row, "robust_cusum_eps" + eps_key, robust_error);
            }

            try {
                DetectorModel opt;
                opt.spec.family = DetectorFamily::cusum;
                opt.llr = make_llr(nu0, nu1);
                const CalibrationResult cal =
                    calibrate_threshold(opt, nu0, far_options(cfg, opt, nu0));
                opt.spec.eta = cal.eta;
                record_calibration(t, "optimal_cusum_eps" + eps_key + ".sigma1=" + row, cal);
                push_cell(t, row, "optimal_cusum_eps" + eps_key,
                          estimate_wdd(opt, nu0, nu1, cfg.runs_per_cell, max_len, cfg.seed,
                                       cfg.threads)
                              .estimate);
            } catch (const std::exception& e) {
                push_error(t, row, "optimal_cusum_eps" + eps_key, e.what());
            }
        }
    }
    return t;
}

ResultTable run_table3(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "table3";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;

    const auto epsilons = cfg.raw.get_double_list("table3.epsilons", {0.05, 0.005});
    const auto sigma0s = cfg.raw.get_double_list("table3.sigma0s", {0.1, 0.5, 1, 5, 10});
    const double sigma1 = cfg.raw.get_double("table3.sigma1", 1.0);

    for (double s0 : sigma0s) t.row_keys.push_back(fmt_key(s0));
    for (double eps : epsilons) t.col_keys.push_back("optimal_cusum_eps" + fmt_key(eps));
    if (cfg.runs_per_cell == 0) return t;

    const std::int64_t max_len = default_max_len(cfg.alpha);

    for (double eps : epsilons) {
        const std::string col = "optimal_cusum_eps" + fmt_key(eps);
        for (double s0 : sigma0s) {
            const std::string row = fmt_key(s0);
            try {
                const Distribution nu0 = contaminated(eps, 0.0, s0);
                const Distribution nu1 = contaminated(eps, 1.0, sigma1);
                DetectorModel opt;
                opt.spec.family = DetectorFamily::cusum;
                opt.llr = make_llr(nu0, nu1);
                const CalibrationResult cal =
                    calibrate_threshold(opt, nu0, far_options(cfg, opt, nu0));
                opt.spec.eta = cal.eta;
                record_calibration(t, col + ".sigma0=" + row, cal);
                push_cell(t, row, col,
                          estimate_wdd(opt, nu0, nu1, cfg.runs_per_cell, max_len, cfg.seed,
                                       cfg.threads)
                              .estimate);
            } catch (const std::exception& e) {
                push_error(t, row, col, e.what());
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// bayes-curve: robust vs optimal Shiryaev average detection delay

ResultTable run_bayes_curve(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "bayes-curve";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;

    const double rho = cfg.raw.get_double("bayes.rho", 0.1);
    const auto thetas = cfg.raw.get_double_list("bayes.thetas", {0.1, 0.5, 1, 2, 3});
    const double band_lo = cfg.raw.get_double("bayes.theta_lo", 0.1);
    const double band_hi = cfg.raw.get_double("bayes.theta_hi", 3.0);

    const Distribution nu0 = Distribution::gaussian(0.0, 1.0);
    const LfdPair lfd = solve_lfd(UncertaintyClass::singleton(nu0),
                                  UncertaintyClass::gaussian_mean_band(band_lo, band_hi, 1.0));

    for (double th : thetas) t.row_keys.push_back(fmt_key(th));
    t.col_keys = {"robust_shiryaev_add", "optimal_shiryaev_add"};
    t.metadata["rho"] = fmt(rho);
    if (cfg.runs_per_cell == 0) return t;

    CalibrationOptions pfa_opt;
    pfa_opt.mode = CalibrationMode::pfa;
    pfa_opt.alpha = cfg.alpha;
    pfa_opt.rho = rho;
    pfa_opt.initial_runs = cfg.raw.get_int("bayes.pfa_initial_runs", 20000);
    pfa_opt.iter_run_cap = cfg.raw.get_int("bayes.pfa_iter_cap", 500000);
    pfa_opt.total_run_cap = cfg.raw.get_int("bayes.pfa_total_cap", 4000000);
    pfa_opt.threads = cfg.threads;

    const std::int64_t max_len = 200000;

    DetectorModel robust;
    robust.spec.family = DetectorFamily::shiryaev;
    robust.spec.rho = rho;
    robust.llr = lfd.llr;
    std::optional<CalibrationResult> cal_robust;
    std::string robust_error;
    try {
        CalibrationOptions o = pfa_opt;
        o.seed = calibration_seed(cfg, robust, "pfa", cfg.alpha, nu0);
        cal_robust = calibrate_threshold(robust, nu0, o);
        robust.spec.eta = cal_robust->eta;
        record_calibration(t, "robust_shiryaev", *cal_robust);
    } catch (const std::exception& e) {
        robust_error = e.what();
    }

    for (double th : thetas) {
        const std::string row = fmt_key(th);
        const Distribution nu1 = Distribution::gaussian(th, 1.0);

        if (cal_robust) {
            try {
                push_cell(t, row, "robust_shiryaev_add",
                          estimate_add(robust, nu0, nu1, rho, cfg.runs_per_cell, max_len,
                                       cfg.seed, cfg.threads)
                              .estimate);
            } catch (const std::exception& e) {
                push_error(t, row, "robust_shiryaev_add", e.what());
            }
        } else {
            push_error(t, row, "robust_shiryaev_add", robust_error);
        }

        try {
            DetectorModel opt;
            opt.spec.family = DetectorFamily::shiryaev;
            opt.spec.rho = rho;
            opt.llr = make_llr(nu0, nu1);
            CalibrationOptions o = pfa_opt;
            o.seed = calibration_seed(cfg, opt, "pfa", cfg.alpha, nu0);
            const CalibrationResult cal = calibrate_threshold(opt, nu0, o);
            opt.spec.eta = cal.eta;
            record_calibration(t, "optimal_shiryaev." + row, cal);
            push_cell(t, row, "optimal_shiryaev_add",
                      estimate_add(opt, nu0, nu1, rho, cfg.runs_per_cell, max_len, cfg.seed,
                                   cfg.threads)
                          .estimate);
        } catch (const std::exception& e) {
            push_error(t, row, "optimal_shiryaev_add", e.what());
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// lfd / jsb / custom

UncertaintyClass class_from_config(const ConfigMap& raw, const std::string& key) {
    return parse_class(raw.require_string(key));
}

ResultTable run_lfd(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "lfd";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;
    const UncertaintyClass P0 = class_from_config(cfg.raw, "lfd.class0");
    const UncertaintyClass P1 = class_from_config(cfg.raw, "lfd.class1");
    const LfdSolveReport r = lfd_solve_report(P0, P1);
    t.metadata["nu0_bar"] = r.nu0_bar;
    t.metadata["nu1_under"] = r.nu1_under;
    t.metadata["llr"] = r.llr;
    t.col_keys = {"value"};
    if (r.censored_pair) {
        t.row_keys = {"a", "b", "residual_a", "residual_b", "degeneracy_limit"};
        const double vals[] = {r.a, r.b, r.residual_a, r.residual_b, r.degeneracy_limit};
        for (std::size_t i = 0; i < t.row_keys.size(); ++i) {
            EstimateWithError e;
            e.value = vals[i];
            e.seed = cfg.seed;
            push_cell(t, t.row_keys[i], "value", e);
        }
    }
    return t;
}

ResultTable run_jsb(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "jsb";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;
    const UncertaintyClass P0 = class_from_config(cfg.raw, "jsb.class0");
    const UncertaintyClass P1 = class_from_config(cfg.raw, "jsb.class1");
    const LfdPair lfd = solve_lfd(P0, P1);

    std::vector<Distribution> probes;
    if (cfg.raw.has("jsb.probes")) {
        std::istringstream is(cfg.raw.require_string("jsb.probes"));
        std::string item;
        while (std::getline(is, item, ';')) {
            if (!item.empty()) probes.push_back(parse_distribution(item));
        }
    } else {
        const auto sds = cfg.raw.get_double_list("jsb.contaminant_sds", {0.1, 1, 10});
        for (const auto& p : default_probes(P0, sds)) probes.push_back(p);
        for (const auto& p : default_probes(P1, sds)) probes.push_back(p);
    }

    JsbOptions opt;
    opt.samples = cfg.raw.get_int("jsb.samples", 100000);
    opt.tolerance = cfg.raw.get_double("jsb.tolerance", 0.01);
    opt.seed = derive(cfg.seed, "jsb");
    const JsbReport report = check_jsb(P0, P1, lfd, probes, opt);

    t.col_keys = {"margin"};
    t.metadata["pass"] = report.pass ? "true" : "false";
    t.metadata["tolerance"] = fmt(report.tolerance);
    int idx = 0;
    for (const auto& m : report.margins) {
        const std::string row =
            std::to_string(idx++) + "|" + (m.pre_change ? "pre|" : "post|") + m.member;
        t.row_keys.push_back(row);
        EstimateWithError e;
        e.value = m.margin;
        e.seed = cfg.seed;
        push_cell(t, row, "margin", e);
    }
    return t;
}

ResultTable run_custom(const ExperimentConfig& cfg) {
    ResultTable t;
    t.experiment = "custom";
    t.alpha = cfg.alpha;
    t.seed = cfg.seed;

    const std::string metric = cfg.raw.get_string("custom.metric", "wdd");
    const Distribution nu0 = parse_distribution(cfg.raw.require_string("custom.nu0"));
    const Distribution nu1 = parse_distribution(cfg.raw.require_string("custom.nu1"));
    const double rho = cfg.raw.get_double("custom.rho", 0.1);

    DetectorModel model;
    model.spec = parse_detector_spec(cfg.raw, "detector");
    const std::string llr_kind = cfg.raw.get_string("custom.llr", "pair");
    if (llr_kind == "pair") model.llr = make_llr(nu0, nu1);
    else if (llr_kind == "lfd") {
        const LfdPair lfd = solve_lfd(class_from_config(cfg.raw, "custom.class0"),
                                      class_from_config(cfg.raw, "custom.class1"));
        model.llr = lfd.llr;
    } else throw ConfigError("custom.llr must be 'pair' or 'lfd'");

    t.row_keys = {"result"};
    t.col_keys = {metric};
    if (cfg.runs_per_cell == 0) return t;

    const std::string mode = cfg.raw.get_string("custom.calibrate", "");
    if (!mode.empty()) {
        CalibrationOptions o;
        o.mode = (mode == "pfa") ? CalibrationMode::pfa : CalibrationMode::far;
        o.alpha = cfg.alpha;
        o.rho = rho;
        o.initial_runs = cfg.cal_initial_runs;
        o.iter_run_cap = cfg.cal_iter_cap;
        o.total_run_cap = cfg.cal_total_cap;
        o.threads = cfg.threads;
        o.seed = calibration_seed(cfg, model, mode.c_str(), cfg.alpha, nu0);
        const CalibrationResult cal = calibrate_threshold(model, nu0, o);
        model.spec.eta = cal.eta;
        record_calibration(t, "detector", cal);
    }

    const std::int64_t max_len = default_max_len(cfg.alpha);
    const auto lambda_grid =
        cfg.raw.get_int_list("custom.lambda_grid", {1, 2, 5, 10, 50, 100, 500});

    try {
        EstimateWithError est;
        if (metric == "wdd") {
            est = estimate_wdd(model, nu0, nu1, cfg.runs_per_cell, max_len, cfg.seed,
                               cfg.threads)
                      .estimate;
        } else if (metric == "add") {
            est = estimate_add(model, nu0, nu1, rho, cfg.runs_per_cell, max_len, cfg.seed,
                               cfg.threads)
                      .estimate;
        } else if (metric == "jsrp") {
            est = estimate_jsrp(model, nu0, nu1, lambda_grid, cfg.runs_per_cell, max_len,
                                cfg.seed, cfg.threads)
                      .estimate;
        } else if (metric == "mttfa") {
            est = estimate_mttfa(model, nu0,
                                 McOptions{cfg.runs_per_cell, max_len,
                                           derive(cfg.seed, "mttfa|" + describe(model) +
                                                                "|nu0=" + nu0.describe()),
                                           cfg.threads});
        } else if (metric == "pfa") {
            est = estimate_pfa(model, nu0, nu1, rho, cfg.runs_per_cell,
                               derive(cfg.seed, "pfa|" + describe(model) + "|nu0=" +
                                                    nu0.describe()),
                               cfg.threads);
        } else {
            throw ConfigError("unknown custom.metric '" + metric + "'");
        }
        push_cell(t, "result", metric, est);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        push_error(t, "result", metric, e.what());
    }
    return t;
}

} // namespace

// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& m) {
    ExperimentConfig cfg;
    cfg.raw = m;
    cfg.id = m.require_string("experiment.id");
    const bool known = cfg.id == "table1" || cfg.id == "table2" || cfg.id == "table3" ||
                       cfg.id == "bayes-curve" || cfg.id == "lfd" || cfg.id == "jsb" ||
                       cfg.id == "custom";
    if (!known) throw ConfigError("unknown experiment.id '" + cfg.id + "'");
    cfg.alpha = m.get_double("experiment.alpha", 0.001);
    if (!(cfg.alpha > 0) || !(cfg.alpha < 1)) throw ConfigError("experiment.alpha must be in (0,1)");
    cfg.seed.base = static_cast<std::uint64_t>(m.get_int("experiment.seed", 20240817));
    cfg.seed.stream = static_cast<std::uint64_t>(m.get_int("experiment.seed_stream", 0));
    cfg.runs_per_cell = m.get_int("experiment.runs_per_cell", 10000);
    if (cfg.runs_per_cell < 0) throw ConfigError("experiment.runs_per_cell must be >= 0");
    cfg.cal_initial_runs = m.get_int("experiment.calibration_initial_runs", 1000);
    cfg.cal_iter_cap = m.get_int("experiment.calibration_iter_cap", 10000);
    cfg.cal_total_cap = m.get_int("experiment.calibration_total_cap", 100000);
    if (cfg.cal_initial_runs < 100 || cfg.cal_iter_cap < cfg.cal_initial_runs ||
        cfg.cal_total_cap < cfg.cal_iter_cap)
        throw ConfigError("calibration budgets must satisfy 100 <= initial <= iter_cap <= total");
    cfg.threads = static_cast<int>(m.get_int("experiment.threads", 0));
    cfg.out_dir = m.get_string("experiment.out_dir", "out");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_map(ConfigMap::parse_file(path));
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultTable t;
    if (cfg.id == "table1") t = run_table1(cfg);
    else if (cfg.id == "table2") t = run_table2(cfg);
    else if (cfg.id == "table3") t = run_table3(cfg);
    else if (cfg.id == "bayes-curve") t = run_bayes_curve(cfg);
    else if (cfg.id == "lfd") t = run_lfd(cfg);
    else if (cfg.id == "jsb") t = run_jsb(cfg);
    else if (cfg.id == "custom") t = run_custom(cfg);
    else throw ConfigError("unknown experiment id '" + cfg.id + "'");
    t.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return t;
}

const CellResult* ResultTable::find(const std::string& row, const std::string& col) const {
    for (const auto& c : cells)
        if (c.row == row && c.column == col) return &c;
    return nullptr;
}

bool ResultTable::same_content(const ResultTable& other) const {
    return table_to_json(*this) == table_to_json(other);
}

// ---------------------------------------------------------------------------
// Emission

void emit_table_csv(const ResultTable& t, const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write csv file: " + path);
    out << "row,column,value,stderr,n_runs,censored_fraction\n";
    char buf[160];
    for (const auto& c : t.cells) {
        const double v = c.ok() ? c.est.value : std::nan("");
        const double se = c.ok() ? c.est.std_error : std::nan("");
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%lld,%.17g\n", v, se,
                      static_cast<long long>(c.est.n_runs), c.est.censored_fraction);
        out << c.row << ',' << c.column << ',' << buf;
    }
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

namespace {

nlohmann::json seed_to_json(const Seed& s) {
    return nlohmann::json{{"base", s.base}, {"stream", s.stream}};
}

Seed seed_from_json(const nlohmann::json& j) {
    return Seed{j.at("base").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>()};
}

} // namespace

std::string table_to_json(const ResultTable& t) {
    nlohmann::json j;
    j["experiment"] = t.experiment;
    j["alpha"] = t.alpha;
    j["seed"] = seed_to_json(t.seed);
    j["rows"] = t.row_keys;
    j["columns"] = t.col_keys;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : t.cells) {
        nlohmann::json jc;
        jc["row"] = c.row;
        jc["column"] = c.column;
        if (c.ok()) {
            jc["value"] = c.est.value;
            jc["stderr"] = c.est.std_error;
        } else {
            jc["error"] = c.error;
        }
        jc["n_runs"] = c.est.n_runs;
        jc["censored_fraction"] = c.est.censored_fraction;
        jc["cell_seed"] = seed_to_json(c.est.seed);
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    j["metadata"] = t.metadata;
    return j.dump(2) + "\n";
}

ResultTable table_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ResultTable t;
    t.experiment = j.at("experiment").get<std::string>();
    t.alpha = j.at("alpha").get<double>();
    t.seed = seed_from_json(j.at("seed"));
    t.row_keys = j.at("rows").get<std::vector<std::string>>();
    t.col_keys = j.at("columns").get<std::vector<std::string>>();
    for (const auto& jc : j.at("cells")) {
        CellResult c;
        c.row = jc.at("row").get<std::string>();
        c.column = jc.at("column").get<std::string>();
        if (jc.contains("error")) c.error = jc.at("error").get<std::string>();
        else {
            c.est.value = jc.at("value").get<double>();
            c.est.std_error = jc.at("stderr").get<double>();
        }
        c.est.n_runs = jc.at("n_runs").get<std::int64_t>();
        c.est.censored_fraction = jc.at("censored_fraction").get<double>();
        c.est.seed = seed_from_json(jc.at("cell_seed"));
        t.cells.push_back(std::move(c));
    }
    t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return t;
}

void emit_table_json(const ResultTable& t, const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write json file: " + path);
    out << table_to_json(t);
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

void emit_curve(const std::string& path, const std::string& label, const std::vector<double>& x,
                const std::vector<double>& y, const std::vector<double>& err) {
    if (x.empty()) throw std::invalid_argument("emit_curve: empty series");
    if (x.size() != y.size() || x.size() != err.size())
        throw std::invalid_argument("emit_curve: size mismatch");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("emit_curve: x must be strictly increasing");
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write curve file: " + path);
    out << "# " << label << "\n# x y stderr\n";
    char buf[128];
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", x[i], y[i], err[i]);
        out << buf;
    }
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Reference checks

namespace {

struct Table1Ref {
    const char* theta;
    double optimal, robust, glr;
};
constexpr Table1Ref kTable1Ref[] = {
    {"0.1", 242.7, 242.7, 496.0}, {"0.2", 111.5, 116.8, 184.0}, {"0.4", 43.2, 55.6, 57.2},
    {"0.6", 23.5, 36.3, 28.6},    {"1", 10.5, 21.5, 12.35},
};

constexpr const char* kSigmaKeys[] = {"0.1", "0.5", "1", "5", "10"};
constexpr double kTable2Robust005[] = {14.77, 14.86, 15.09, 15.52, 15.59};   // eps = 0.05
constexpr double kTable2Robust0005[] = {11.27, 11.27, 11.27, 11.29, 11.29};  // eps = 0.005
constexpr double kTable2Optimal005[] = {9.17, 9.12, 9.08, 8.78, 8.65};
constexpr double kTable2Optimal0005[] = {10.38, 10.39, 10.35, 10.33, 10.34};

void check_rel(CheckOutcome& out, const ResultTable& t, const std::string& row,
               const std::string& col, double expect, double rel_tol) {
    const CellResult* c = t.find(row, col);
    if (!c || !c->ok()) {
        out.pass = false;
        out.messages.push_back("missing/failed cell " + row + "/" + col +
                               (c ? ": " + c->error : ""));
        return;
    }
    const double rel = std::fabs(c->est.value - expect) / expect;
    if (!(rel <= rel_tol)) {
        out.pass = false;
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%s/%s: got %.4g, reference %.4g (rel err %.2f%% > %.0f%%)",
                      row.c_str(), col.c_str(), c->est.value, expect, 100 * rel, 100 * rel_tol);
        out.messages.push_back(buf);
    }
}

CheckOutcome check_table1(const ResultTable& t) {
    CheckOutcome out;
    for (const auto& r : kTable1Ref) {
        check_rel(out, t, r.theta, "optimal_cusum", r.optimal, 0.05);
        check_rel(out, t, r.theta, "robust_cusum", r.robust, 0.05);
        check_rel(out, t, r.theta, "glr", r.glr, 0.10);
    }
    return out;
}

CheckOutcome check_table2(const ResultTable& t) {
    CheckOutcome out;
    check_rel(out, t, "1", "robust_cusum_eps0.05", 15.09, 0.05);
    check_rel(out, t, "1", "robust_cusum_eps0.005", 11.27, 0.05);

    // Robust delay should be nearly flat in sigma1 for eps = 0.05.
    double mn = kPosInf, mx = kNegInf;
    bool have_all = true;
    for (const char* s : kSigmaKeys) {
        const CellResult* c = t.find(s, "robust_cusum_eps0.05");
        if (!c || !c->ok()) {
            have_all = false;
            continue;
        }
        mn = std::min(mn, c->est.value);
        mx = std::max(mx, c->est.value);
    }
    if (!have_all) {
        out.pass = false;
        out.messages.push_back("robust_cusum_eps0.05 column incomplete");
    } else if (!((mx - mn) / mn < 0.06)) {
        out.pass = false;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "robust_cusum_eps0.05 varies %.2f%% across sigma1 (limit 6%%)",
                      100 * (mx - mn) / mn);
        out.messages.push_back(buf);
    }

    for (std::size_t i = 0; i < 5; ++i) {
        check_rel(out, t, kSigmaKeys[i], "robust_cusum_eps0.05", kTable2Robust005[i], 0.05);
        check_rel(out, t, kSigmaKeys[i], "robust_cusum_eps0.005", kTable2Robust0005[i], 0.05);
        check_rel(out, t, kSigmaKeys[i], "optimal_cusum_eps0.05", kTable2Optimal005[i], 0.05);
        check_rel(out, t, kSigmaKeys[i], "optimal_cusum_eps0.005", kTable2Optimal0005[i], 0.05);
    }
    return out;
}

CheckOutcome check_table3(const ResultTable& t) {
    CheckOutcome out;
    check_rel(out, t, "1", "optimal_cusum_eps0.05", 10.44, 0.05);
    check_rel(out, t, "1", "optimal_cusum_eps0.005", 10.56, 0.05);
    return out;
}

CheckOutcome check_bayes(const ResultTable& t) {
    CheckOutcome out;
    const auto pooled = [](const CellResult* a, const CellResult* b) {
        return std::sqrt(a->est.std_error * a->est.std_error +
                         b->est.std_error * b->est.std_error);
    };
    const CellResult* r0 = t.find("0.1", "robust_shiryaev_add");
    const CellResult* o0 = t.find("0.1", "optimal_shiryaev_add");
    if (!r0 || !o0 || !r0->ok() || !o0->ok()) {
        out.pass = false;
        out.messages.push_back("missing theta=0.1 cells");
    } else if (std::fabs(r0->est.value - o0->est.value) > 2 * pooled(r0, o0) + 1e-12) {
        out.pass = false;
        out.messages.push_back("robust and optimal ADD at theta=0.1 disagree beyond 2 stderr");
    }
    for (const char* th : {"0.5", "1", "2", "3"}) {
        const CellResult* r = t.find(th, "robust_shiryaev_add");
        const CellResult* o = t.find(th, "optimal_shiryaev_add");
        if (!r || !o || !r->ok() || !o->ok()) {
            out.pass = false;
            out.messages.push_back(std::string("missing theta=") + th + " cells");
            continue;
        }
        if (!(r->est.value - o->est.value > 2 * pooled(r, o))) {
            out.pass = false;
            out.messages.push_back(std::string("robust ADD does not exceed optimal at theta=") +
                                   th);
        }
    }
    // Every calibrated detector in this experiment must have hit the PFA target.
    for (const auto& [k, v] : t.metadata) {
        if (k.rfind("achieved.", 0) != 0 || k.rfind(".value") != k.size() - 6) continue;
        const std::string base = k.substr(0, k.size() - 6);
        const double val = std::strtod(v.c_str(), nullptr);
        const double se = std::strtod(t.metadata.at(base + ".stderr").c_str(), nullptr);
        if (std::fabs(val - t.alpha) > 2 * se) {
            out.pass = false;
            out.messages.push_back("calibrated PFA misses alpha beyond 2 stderr: " + base);
        }
    }
    return out;
}

} // namespace

CheckOutcome check_against_reference(const ResultTable& t) {
    if (t.experiment == "table1") return check_table1(t);
    if (t.experiment == "table2") return check_table2(t);
    if (t.experiment == "table3") return check_table3(t);
    if (t.experiment == "bayes-curve") return check_bayes(t);
    CheckOutcome out;
    out.pass = false;
    out.messages.push_back("no reference values for experiment '" + t.experiment + "'");
    return out;
}

// ---------------------------------------------------------------------------
// lfd / jsb reports

LfdSolveReport lfd_solve_report(const UncertaintyClass& P0, const UncertaintyClass& P1) {
    LfdSolveReport r;
    const LfdPair lfd = solve_lfd(P0, P1);
    r.nu0_bar = lfd.nu0_bar.describe();
    r.nu1_under = lfd.nu1_under.describe();
    r.llr = describe(lfd.llr);
    if (P0.kind() == UncertaintyClass::Kind::eps_contamination &&
        P1.kind() == UncertaintyClass::Kind::eps_contamination) {
        r.censored_pair = true;
        const HuberThresholds th = huber_thresholds(P0.nominal(), P1.nominal(), P0.eps());
        r.a = th.a;
        r.b = th.b;
        r.residual_a = th.residual_a;
        r.residual_b = th.residual_b;
        r.degeneracy_limit = huber_degeneracy_limit(P0.nominal(), P1.nominal());
    }
    return r;
}

std::string lfd_report_json(const LfdSolveReport& r) {
    nlohmann::json j;
    j["nu0_bar"] = r.nu0_bar;
    j["nu1_under"] = r.nu1_under;
    j["llr"] = r.llr;
    if (r.censored_pair) {
        j["a"] = r.a;
        j["b"] = r.b;
        j["residuals"] = {{"a", r.residual_a}, {"b", r.residual_b}};
        j["degeneracy_limit"] = r.degeneracy_limit;
    }
    return j.dump(2) + "\n";
}

std::string jsb_report_json(const JsbReport& r) {
    nlohmann::json j;
    j["pass"] = r.pass;
    j["tolerance"] = r.tolerance;
    nlohmann::json margins = nlohmann::json::array();
    for (const auto& m : r.margins) {
        margins.push_back({{"member", m.member},
                           {"side", m.pre_change ? "pre" : "post"},
                           {"margin", m.margin},
                           {"pass", m.pass}});
    }
    j["margins"] = std::move(margins);
    return j.dump(2) + "\n";
}

} // namespace qcd
