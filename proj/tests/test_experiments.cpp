#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcd/experiments.hpp"

using namespace qcd;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("config text parsing") {
    const ConfigMap m = ConfigMap::parse_text(
        "# comment\n"
        "[experiment]\n"
        "id = table1\n"
        "alpha = 0.01\n"
        "\n"
        "[table1]\n"
        "thetas = 0.1 0.2, 0.4\n");
    CHECK(m.require_string("experiment.id") == "table1");
    CHECK(m.get_double("experiment.alpha", 0) == doctest::Approx(0.01));
    CHECK(m.get_double_list("table1.thetas", {}) == std::vector<double>{0.1, 0.2, 0.4});
    CHECK(m.get_int("experiment.runs_per_cell", 7) == 7);
    CHECK_THROWS_AS(m.require_string("experiment.missing"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_text("[experiment\nid = x\n"), ConfigError);
    CHECK_THROWS_AS(ConfigMap::parse_text("novalue\n"), ConfigError);
}

TEST_CASE("distribution and class expressions") {
    CHECK(parse_distribution("gaussian(0, 1)") == Distribution::gaussian(0, 1));
    CHECK(parse_distribution("exp(2)") == Distribution::exponential(2));
    const Distribution mix = parse_distribution("mixture(0.95:gaussian(1,1), 0.05:gaussian(1,5))");
    CHECK(mix.kind() == Distribution::Kind::mixture);
    CHECK(mix.log_density(0.3) ==
          doctest::Approx(Distribution::mixture({0.95, 0.05},
                                                {Distribution::gaussian(1, 1),
                                                 Distribution::gaussian(1, 5)})
                              .log_density(0.3)));
    CHECK_THROWS_AS(parse_distribution("cauchy(0,1)"), ConfigError);
    CHECK_THROWS_AS(parse_distribution("gaussian(0,1) trailing"), ConfigError);

    const UncertaintyClass band = parse_class("gaussian_band(0.1, 3, 1)");
    CHECK(band.kind() == UncertaintyClass::Kind::gaussian_mean_band);
    const UncertaintyClass cont = parse_class("eps_contamination(gaussian(0,1), 0.05)");
    CHECK(cont.eps() == doctest::Approx(0.05));
    CHECK_THROWS_AS(parse_class("ball(gaussian(0,1), 1)"), ConfigError);
}

TEST_CASE("experiment config validation") {
    ConfigMap m;
    m.set("experiment.id", "table1");
    CHECK_NOTHROW(ExperimentConfig::from_map(m));
    m.set("experiment.id", "tableX");
    CHECK_THROWS_AS(ExperimentConfig::from_map(m), ConfigError);
    m.set("experiment.id", "table1");
    m.set("experiment.alpha", "2.0");
    CHECK_THROWS_AS(ExperimentConfig::from_map(m), ConfigError);
    m.set("experiment.alpha", "0.001");
    m.set("experiment.calibration_iter_cap", "10");
    CHECK_THROWS_AS(ExperimentConfig::from_map(m), ConfigError);
}

TEST_CASE("zero-budget dry run validates and emits keys only") {
    ConfigMap m;
    m.set("experiment.id", "table1");
    m.set("experiment.runs_per_cell", "0");
    const ResultTable t = run_experiment(ExperimentConfig::from_map(m));
    CHECK(t.row_keys == std::vector<std::string>{"0.1", "0.2", "0.4", "0.6", "1"});
    CHECK(t.col_keys == std::vector<std::string>{"optimal_cusum", "robust_cusum", "glr"});
    CHECK(t.cells.empty());
    CHECK(t.metadata.at("lfd.nu1_under") == "gaussian(0.10000000000000001,1)");
}

TEST_CASE("csv emission format") {
    ResultTable t;
    t.experiment = "custom";
    t.alpha = 0.5;
    t.row_keys = {"r"};
    t.col_keys = {"c"};
    CellResult cell;
    cell.row = "r";
    cell.column = "c";
    cell.est.value = 1.0 / 3.0;
    cell.est.std_error = 0.25;
    cell.est.n_runs = 7;
    cell.est.censored_fraction = 0.0;
    t.cells.push_back(cell);

    const std::string path = temp_path("qcd_test_table.csv");
    emit_table_csv(t, path);
    const std::string text = slurp(path);
    CHECK(text == "row,column,value,stderr,n_runs,censored_fraction\n"
                  "r,c,0.33333333333333331,0.25,7,0\n");
}

TEST_CASE("json round trip reproduces the table exactly") {
    ConfigMap m;
    m.set("experiment.id", "custom");
    m.set("experiment.runs_per_cell", "200");
    m.set("experiment.threads", "2");
    m.set("custom.metric", "mttfa");
    m.set("custom.nu0", "gaussian(0,1)");
    m.set("custom.nu1", "gaussian(1,1)");
    m.set("detector.type", "cusum");
    m.set("detector.eta", "2.0");
    const ResultTable t = run_experiment(ExperimentConfig::from_map(m));
    REQUIRE(t.cells.size() == 1);
    CHECK(t.cells.front().ok());

    const ResultTable back = table_from_json(table_to_json(t));
    CHECK(back.same_content(t));

    // error cells survive the round trip too
    ResultTable errt = t;
    errt.cells.front().error = "boom";
    const ResultTable errback = table_from_json(table_to_json(errt));
    CHECK(errback.same_content(errt));
}

TEST_CASE("experiments are deterministic end to end") {
    ConfigMap m;
    m.set("experiment.id", "custom");
    m.set("experiment.runs_per_cell", "300");
    m.set("experiment.seed", "777");
    m.set("custom.metric", "wdd");
    m.set("custom.nu0", "gaussian(0,1)");
    m.set("custom.nu1", "gaussian(1,1)");
    m.set("detector.type", "cusum");
    m.set("detector.eta", "3.0");
    const ExperimentConfig cfg = ExperimentConfig::from_map(m);

    ConfigMap m2 = m;
    m2.set("experiment.threads", "1"); // thread count must not change results
    const ResultTable a = run_experiment(cfg);
    const ResultTable b = run_experiment(ExperimentConfig::from_map(m2));
    CHECK(a.same_content(b));

    const std::string pa = temp_path("qcd_det_a.csv");
    const std::string pb = temp_path("qcd_det_b.csv");
    emit_table_csv(a, pa);
    emit_table_csv(b, pb);
    CHECK(slurp(pa) == slurp(pb));
}

TEST_CASE("curve emission") {
    const std::string path = temp_path("qcd_test_curve.dat");
    emit_curve(path, "series", {0.1, 0.5, 1.0}, {10.0, 5.0, 2.0}, {0.1, 0.05, 0.02});
    const std::string text = slurp(path);
    CHECK(text.rfind("# series\n# x y stderr\n", 0) == 0);
    CHECK(text.find("0.5 5 0.050000000000000003\n") != std::string::npos);

    CHECK_NOTHROW(emit_curve(temp_path("qcd_single.dat"), "one", {1.0}, {2.0}, {0.1}));
    CHECK_THROWS_AS(emit_curve(path, "bad", {1.0, 1.0}, {1.0, 2.0}, {0.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(emit_curve(path, "empty", {}, {}, {}), std::invalid_argument);
}

TEST_CASE("reference checks pass on reference values and catch misses") {
    ResultTable t;
    t.experiment = "table3";
    t.alpha = 0.001;
    t.row_keys = {"1"};
    t.col_keys = {"optimal_cusum_eps0.05", "optimal_cusum_eps0.005"};
    CellResult a;
    a.row = "1";
    a.column = "optimal_cusum_eps0.05";
    a.est.value = 10.44;
    CellResult b = a;
    b.column = "optimal_cusum_eps0.005";
    b.est.value = 10.56;
    t.cells = {a, b};
    CHECK(check_against_reference(t).pass);

    t.cells[0].est.value = 12.0; // ~15% off
    const CheckOutcome bad = check_against_reference(t);
    CHECK_FALSE(bad.pass);
    CHECK(bad.messages.size() == 1);
}

TEST_CASE("lfd report carries thresholds for contamination pairs") {
    const LfdSolveReport r =
        lfd_solve_report(parse_class("eps_contamination(gaussian(0,1), 0.05)"),
                         parse_class("eps_contamination(gaussian(1,1), 0.05)"));
    CHECK(r.censored_pair);
    CHECK(r.a * r.b == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.residual_a < 1e-8);
    CHECK(r.residual_b < 1e-8);
    CHECK(r.degeneracy_limit > 0.2);
    const std::string json = lfd_report_json(r);
    CHECK(json.find("degeneracy_limit") != std::string::npos);

    const LfdSolveReport band = lfd_solve_report(parse_class("singleton(gaussian(0,1))"),
                                                 parse_class("gaussian_band(0.1,3,1)"));
    CHECK_FALSE(band.censored_pair);
    CHECK(band.nu1_under == "gaussian(0.10000000000000001,1)");
}
