#pragma once
#include <map>
#include <string>
#include <vector>

#include "qcd/calibration.hpp"
#include "qcd/config.hpp"
#include "qcd/simulator.hpp"
#include "qcd/uncertainty.hpp"

namespace qcd {

struct CellResult {
    std::string row;
    std::string column;
    EstimateWithError est;
    std::string error; // nonempty when the cell failed

    bool ok() const { return error.empty(); }
};

struct ResultTable {
    std::string experiment;
    double alpha = 0;
    Seed seed;
    std::vector<std::string> row_keys;
    std::vector<std::string> col_keys;
    std::vector<CellResult> cells; // row-major when complete; empty on dry runs
    std::map<std::string, std::string> metadata;
    double wall_seconds = 0; // reporting only; never serialized

    const CellResult* find(const std::string& row, const std::string& col) const;
    bool same_content(const ResultTable& other) const; // everything except wall_seconds
};

struct ExperimentConfig {
    std::string id; // table1|table2|table3|bayes-curve|lfd|jsb|custom
    double alpha = 0.001;
    Seed seed{20240817, 0};
    std::int64_t runs_per_cell = 10000; // 0: dry run (validate only)
    std::int64_t cal_initial_runs = 1000;
    std::int64_t cal_iter_cap = 10000;
    std::int64_t cal_total_cap = 100000;
    int threads = 0;
    std::string out_dir = "out";
    ConfigMap raw;

    static ExperimentConfig from_map(const ConfigMap& m);
    static ExperimentConfig from_file(const std::string& path);
};

// Calibrate-then-evaluate pipeline for the configured experiment.
// Deterministic given the config; per-cell failures are recorded in the cell
// instead of aborting the table.
ResultTable run_experiment(const ExperimentConfig& cfg);

// CSV columns: row,column,value,stderr,n_runs,censored_fraction
// (17 significant digits, no locale).
void emit_table_csv(const ResultTable& t, const std::string& path);
void emit_table_json(const ResultTable& t, const std::string& path);
std::string table_to_json(const ResultTable& t);
ResultTable table_from_json(const std::string& text);

// Plot series: '# <label>' header then 'x y stderr' rows. x must be strictly
// increasing and nonempty.
void emit_curve(const std::string& path, const std::string& label, const std::vector<double>& x,
                const std::vector<double>& y, const std::vector<double>& err);

struct CheckOutcome {
    bool pass = true;
    std::vector<std::string> messages; // one per failed check
};

// Compare a finished table against the built-in reference values at the
// published tolerances (used by --check and the acceptance suite).
CheckOutcome check_against_reference(const ResultTable& t);

struct LfdSolveReport {
    bool censored_pair = false; // true for the contamination construction
    double a = 0, b = kPosInf;
    double residual_a = 0, residual_b = 0;
    double degeneracy_limit = 0;
    std::string nu0_bar, nu1_under, llr;
};

LfdSolveReport lfd_solve_report(const UncertaintyClass& P0, const UncertaintyClass& P1);
std::string lfd_report_json(const LfdSolveReport& r);
std::string jsb_report_json(const JsbReport& r);

} // namespace qcd
