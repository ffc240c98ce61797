// Command-line front end: config-driven experiment presets plus direct
// calibrate / evaluate / lfd / jsb entry points. Exit codes: 0 ok, 1 runtime
// failure, 2 config error, 3 reference-tolerance miss under --check.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcd/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> budget;
    std::string out;
    bool check = false;
    std::optional<int> threads;
};

void add_common(CLI::App* sub, CommonOpts& o, bool with_check) {
    sub->add_option("--config", o.config_path, "experiment config file");
    sub->add_option("--seed", o.seed, "override the base seed");
    sub->add_option("--budget", o.budget, "override the run budget");
    sub->add_option("--out", o.out, "output directory (tables) or file (reports)");
    sub->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    if (with_check) sub->add_flag("--check", o.check, "compare against reference values");
}

qcd::ConfigMap load_config(const CommonOpts& o, const std::string& preset_id) {
    qcd::ConfigMap m = o.config_path.empty() ? qcd::ConfigMap::parse_text("")
                                             : qcd::ConfigMap::parse_file(o.config_path);
    if (!preset_id.empty() && !m.has("experiment.id")) m.set("experiment.id", preset_id);
    if (!preset_id.empty() && m.get_string("experiment.id", preset_id) != preset_id)
        throw qcd::ConfigError("config experiment.id does not match subcommand");
    if (o.seed) m.set("experiment.seed", std::to_string(*o.seed));
    if (o.budget) m.set("experiment.runs_per_cell", std::to_string(*o.budget));
    if (!o.out.empty()) m.set("experiment.out_dir", o.out);
    if (o.threads) m.set("experiment.threads", std::to_string(*o.threads));
    return m;
}

void print_table(const qcd::ResultTable& t) {
    std::printf("experiment %s  (alpha=%g, seed=%llu)\n", t.experiment.c_str(), t.alpha,
                static_cast<unsigned long long>(t.seed.base));
    std::printf("%-10s", "");
    for (const auto& c : t.col_keys) std::printf("  %22s", c.c_str());
    std::printf("\n");
    for (const auto& r : t.row_keys) {
        std::printf("%-10s", r.c_str());
        for (const auto& c : t.col_keys) {
            const qcd::CellResult* cell = t.find(r, c);
            if (!cell) std::printf("  %22s", "-");
            else if (!cell->ok()) std::printf("  %22s", "ERROR");
            else {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.4g +- %.2g", cell->est.value,
                              cell->est.std_error);
                std::printf("  %22s", buf);
            }
        }
        std::printf("\n");
    }
    std::printf("wall time: %.1f s\n", t.wall_seconds);
}

int run_table_command(const CommonOpts& o, const std::string& id) {
    const qcd::ExperimentConfig cfg = qcd::ExperimentConfig::from_map(load_config(o, id));
    const qcd::ResultTable t = qcd::run_experiment(cfg);
    print_table(t);
    const std::string base = cfg.out_dir + "/" + cfg.id;
    qcd::emit_table_csv(t, base + ".csv");
    qcd::emit_table_json(t, base + ".json");
    std::printf("wrote %s.csv and %s.json\n", base.c_str(), base.c_str());

    if (cfg.id == "bayes-curve" && !t.cells.empty()) {
        for (const std::string& col : t.col_keys) {
            std::vector<double> x, y, e;
            for (const auto& r : t.row_keys) {
                const qcd::CellResult* cell = t.find(r, col);
                if (!cell || !cell->ok()) continue;
                x.push_back(std::strtod(r.c_str(), nullptr));
                y.push_back(cell->est.value);
                e.push_back(cell->est.std_error);
            }
            if (!x.empty()) {
                const std::string path = cfg.out_dir + "/" + col + ".dat";
                qcd::emit_curve(path, col, x, y, e);
                std::printf("wrote %s\n", path.c_str());
            }
        }
    }

    if (o.check) {
        const qcd::CheckOutcome res = qcd::check_against_reference(t);
        for (const auto& msg : res.messages) std::fprintf(stderr, "check: %s\n", msg.c_str());
        std::printf("reference check: %s\n", res.pass ? "PASS" : "FAIL");
        if (!res.pass) return 3;
    }
    return 0;
}

void write_or_print(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
}

int run_calibrate(const CommonOpts& o) {
    if (o.config_path.empty()) throw qcd::ConfigError("calibrate requires --config");
    qcd::ConfigMap m = load_config(o, "");
    const double alpha = m.get_double("experiment.alpha", 0.001);

    qcd::DetectorModel model;
    model.spec = qcd::parse_detector_spec(m, "detector");
    const qcd::Distribution nu0 = qcd::parse_distribution(m.require_string("calibrate.nu0"));
    const std::string llr_kind = m.get_string("calibrate.llr", "pair");
    if (llr_kind == "pair") {
        model.llr = qcd::make_llr(nu0, qcd::parse_distribution(m.require_string("calibrate.nu1")));
    } else if (llr_kind == "lfd") {
        model.llr = qcd::solve_lfd(qcd::parse_class(m.require_string("calibrate.class0")),
                                   qcd::parse_class(m.require_string("calibrate.class1")))
                        .llr;
    } else {
        throw qcd::ConfigError("calibrate.llr must be 'pair' or 'lfd'");
    }

    qcd::CalibrationOptions opt;
    const std::string mode = m.get_string("calibrate.mode", "far");
    if (mode != "far" && mode != "pfa") throw qcd::ConfigError("calibrate.mode: far or pfa");
    opt.mode = mode == "far" ? qcd::CalibrationMode::far : qcd::CalibrationMode::pfa;
    opt.alpha = alpha;
    opt.rho = m.get_double("calibrate.rho", 0.1);
    opt.initial_runs = m.get_int("calibrate.initial_runs", 1000);
    opt.iter_run_cap = m.get_int("calibrate.iter_cap", 10000);
    opt.total_run_cap = o.budget.value_or(m.get_int("calibrate.total_cap", 100000));
    opt.threads = o.threads.value_or(static_cast<int>(m.get_int("experiment.threads", 0)));
    qcd::Seed seed;
    seed.base = static_cast<std::uint64_t>(m.get_int("experiment.seed", 20240817));
    if (o.seed) seed.base = *o.seed;
    opt.seed = derive(seed, "cli-calibrate|" + describe(model));

    const qcd::CalibrationResult r = qcd::calibrate_threshold(model, nu0, opt);
    nlohmann::json j;
    j["eta"] = r.eta;
    j["target"] = r.target;
    j["mode"] = mode;
    j["iterations"] = r.iterations;
    j["total_runs"] = r.total_runs;
    j["achieved"] = {{"value", r.achieved.value},
                     {"stderr", r.achieved.std_error},
                     {"n_runs", r.achieved.n_runs},
                     {"censored_fraction", r.achieved.censored_fraction}};
    write_or_print(o.out, j.dump(2) + "\n");
    if (r.achieved.censoring_warning())
        std::fprintf(stderr, "warning: censored fraction %.3g biases the estimate low\n",
                     r.achieved.censored_fraction);
    return 0;
}

int run_evaluate(const CommonOpts& o) {
    if (o.config_path.empty()) throw qcd::ConfigError("evaluate requires --config");
    qcd::ConfigMap m = load_config(o, "custom");
    const qcd::ExperimentConfig cfg = qcd::ExperimentConfig::from_map(m);
    const qcd::ResultTable t = qcd::run_experiment(cfg);
    if (t.cells.empty()) throw std::runtime_error("evaluate produced no result");
    const qcd::CellResult& c = t.cells.front();
    if (!c.ok()) throw std::runtime_error("evaluate failed: " + c.error);
    nlohmann::json j;
    j["metric"] = c.column;
    j["value"] = c.est.value;
    j["stderr"] = c.est.std_error;
    j["n_runs"] = c.est.n_runs;
    j["censored_fraction"] = c.est.censored_fraction;
    for (const auto& [k, v] : t.metadata) j["metadata"][k] = v;
    write_or_print(o.out.empty() ? "" : o.out, j.dump(2) + "\n");
    return 0;
}

int run_lfd_solve(const CommonOpts& o, std::string class0, std::string class1) {
    qcd::ConfigMap m = load_config(o, "");
    if (class0.empty()) class0 = m.require_string("lfd.class0");
    if (class1.empty()) class1 = m.require_string("lfd.class1");
    const qcd::LfdSolveReport r =
        qcd::lfd_solve_report(qcd::parse_class(class0), qcd::parse_class(class1));
    write_or_print(o.out, qcd::lfd_report_json(r));
    return 0;
}

int run_jsb_check(const CommonOpts& o, std::string class0, std::string class1) {
    qcd::ConfigMap m = load_config(o, "");
    if (!class0.empty()) m.set("jsb.class0", class0);
    if (!class1.empty()) m.set("jsb.class1", class1);
    m.set("experiment.id", "jsb");
    const qcd::ExperimentConfig cfg = qcd::ExperimentConfig::from_map(m);

    const qcd::UncertaintyClass P0 = qcd::parse_class(m.require_string("jsb.class0"));
    const qcd::UncertaintyClass P1 = qcd::parse_class(m.require_string("jsb.class1"));
    const qcd::LfdPair lfd = qcd::solve_lfd(P0, P1);
    std::vector<qcd::Distribution> probes;
    if (m.has("jsb.probes")) {
        std::string rest = m.require_string("jsb.probes");
        std::size_t pos = 0;
        while (pos < rest.size()) {
            const std::size_t next = rest.find(';', pos);
            const std::string item = rest.substr(pos, next == std::string::npos ? next : next - pos);
            if (!item.empty()) probes.push_back(qcd::parse_distribution(item));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    } else {
        const auto sds = m.get_double_list("jsb.contaminant_sds", {0.1, 1, 10});
        for (const auto& p : qcd::default_probes(P0, sds)) probes.push_back(p);
        for (const auto& p : qcd::default_probes(P1, sds)) probes.push_back(p);
    }
    qcd::JsbOptions opt;
    opt.samples = m.get_int("jsb.samples", 100000);
    opt.tolerance = m.get_double("jsb.tolerance", 0.01);
    opt.seed = derive(cfg.seed, "jsb");
    const qcd::JsbReport report = qcd::check_jsb(P0, P1, lfd, probes, opt);
    write_or_print(o.out, qcd::jsb_report_json(report));
    return report.pass ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust quickest change detection toolkit"};
    app.require_subcommand(1);

    CommonOpts o_table1, o_table2, o_table3, o_bayes, o_cal, o_eval, o_lfd, o_jsb;
    std::string lfd_c0, lfd_c1, jsb_c0, jsb_c1;

    add_common(app.add_subcommand("table1", "gaussian mean-shift delay table"), o_table1, true);
    add_common(app.add_subcommand("table2", "contamination delay table (sigma1 sweep)"), o_table2,
               true);
    add_common(app.add_subcommand("table3", "contamination delay table (sigma0 sweep)"), o_table3,
               true);
    add_common(app.add_subcommand("bayes-curve", "robust vs optimal Shiryaev delay curve"),
               o_bayes, true);
    add_common(app.add_subcommand("calibrate", "calibrate a detector threshold"), o_cal, false);
    add_common(app.add_subcommand("evaluate", "estimate one delay/false-alarm metric"), o_eval,
               false);

    CLI::App* lfd = app.add_subcommand("lfd", "least favorable distributions");
    CLI::App* lfd_solve = lfd->add_subcommand("solve", "solve for the LFD pair");
    add_common(lfd_solve, o_lfd, false);
    lfd_solve->add_option("--class0", lfd_c0, "pre-change class expression");
    lfd_solve->add_option("--class1", lfd_c1, "post-change class expression");

    CLI::App* jsb = app.add_subcommand("jsb", "joint stochastic boundedness");
    CLI::App* jsb_check = jsb->add_subcommand("check", "sampled dominance check");
    add_common(jsb_check, o_jsb, false);
    jsb_check->add_option("--class0", jsb_c0, "pre-change class expression");
    jsb_check->add_option("--class1", jsb_c1, "post-change class expression");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("table1")) return run_table_command(o_table1, "table1");
        if (app.got_subcommand("table2")) return run_table_command(o_table2, "table2");
        if (app.got_subcommand("table3")) return run_table_command(o_table3, "table3");
        if (app.got_subcommand("bayes-curve")) return run_table_command(o_bayes, "bayes-curve");
        if (app.got_subcommand("calibrate")) return run_calibrate(o_cal);
        if (app.got_subcommand("evaluate")) return run_evaluate(o_eval);
        if (lfd_solve->parsed()) return run_lfd_solve(o_lfd, lfd_c0, lfd_c1);
        if (jsb_check->parsed()) return run_jsb_check(o_jsb, jsb_c0, jsb_c1);
        std::fprintf(stderr, "no subcommand\n");
        return 2;
    } catch (const qcd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
