#pragma once

#include "kacanov/iterate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kacanov {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat-key JSON experiment description. Every constraint the library
/// enforces is re-checked here at load so a bad file fails with the name
/// of the violated key instead of a stack trace mid-run.
struct ExperimentConfig {
    std::string experiment; // peak | peak-scalar | square | square-zero | lshape | rate-study | lemma-check
    double p = 0.0;
    std::string schedule_kind; // fixed | algebraic
    std::optional<double> eps_minus, eps_plus;
    std::optional<double> alpha, beta;
    std::optional<int> mesh_n;
    std::optional<int> max_iter;
    double min_decrement = 0.0;
    double K1 = 1.0;
    std::optional<double> q; // defaults to 2p
    double cg_tol = 1e-10;
    std::string output;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_json_file(const std::string& path);

    bool is_trace_experiment() const { return experiment != "lemma-check"; }
    bool needs_mesh() const {
        return experiment == "peak" || experiment == "square" || experiment == "square-zero" ||
               experiment == "lshape" || experiment == "rate-study";
    }

    double q_value() const { return q.value_or(2.0 * p); }

    void validate() const;
    Exponent exponent() const {
        return experiment == "peak-scalar" ? Exponent::unchecked(p) : Exponent(p);
    }
    Schedule schedule() const;
};

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "experiment", "p",        "schedule.kind", "schedule.eps_minus",
        "schedule.eps_plus", "schedule.alpha", "schedule.beta", "mesh_n",
        "max_iter",   "min_decrement", "K1",    "q",
        "cg_tol",     "output"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key \"" + key + "\"");
    }
    const auto get = [&j](const char* key) { return j.contains(key) ? &j.at(key) : nullptr; };

    ExperimentConfig c;
    if (const auto* v = get("experiment")) c.experiment = v->get<std::string>();
    if (const auto* v = get("p")) c.p = v->get<double>();
    if (const auto* v = get("schedule.kind")) c.schedule_kind = v->get<std::string>();
    if (const auto* v = get("schedule.eps_minus")) c.eps_minus = v->get<double>();
    if (const auto* v = get("schedule.eps_plus")) c.eps_plus = v->get<double>();
    if (const auto* v = get("schedule.alpha")) c.alpha = v->get<double>();
    if (const auto* v = get("schedule.beta")) c.beta = v->get<double>();
    if (const auto* v = get("mesh_n")) c.mesh_n = v->get<int>();
    if (const auto* v = get("max_iter")) c.max_iter = v->get<int>();
    if (const auto* v = get("min_decrement")) c.min_decrement = v->get<double>();
    if (const auto* v = get("K1")) c.K1 = v->get<double>();
    if (const auto* v = get("q")) c.q = v->get<double>();
    if (const auto* v = get("cg_tol")) c.cg_tol = v->get<double>();
    if (const auto* v = get("output")) c.output = v->get<std::string>();
    return c;
}

inline ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file \"" + path + "\" is not valid JSON: " + e.what());
    }
    return from_json(j);
}

inline void ExperimentConfig::validate() const {
    static const std::vector<std::string> names = {"peak",   "peak-scalar", "square",
                                                   "square-zero", "lshape", "rate-study",
                                                   "lemma-check"};
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw ConfigError("experiment must be one of peak, peak-scalar, square, square-zero, "
                          "lshape, rate-study, lemma-check");
    if (!is_trace_experiment()) return; // lemma-check needs nothing else

    if (experiment == "peak-scalar") {
        if (!(p > 1.0)) throw ConfigError("p must satisfy p > 1");
    } else if (!(p > 1.0 && p <= 2.0)) {
        throw ConfigError("p must satisfy 1 < p <= 2 (p > 2 is allowed only for experiment "
                          "\"peak-scalar\")");
    }

    if (schedule_kind != "fixed" && schedule_kind != "algebraic")
        throw ConfigError("schedule.kind must be \"fixed\" or \"algebraic\"");
    if (schedule_kind == "fixed") {
        if (!eps_minus || !eps_plus)
            throw ConfigError("fixed schedule requires schedule.eps_minus and schedule.eps_plus");
        if (!(*eps_minus > 0.0) || !(*eps_plus >= *eps_minus))
            throw ConfigError("schedule requires 0 < schedule.eps_minus <= schedule.eps_plus");
    } else {
        if (!alpha || !beta)
            throw ConfigError("algebraic schedule requires schedule.alpha and schedule.beta");
        if (!(*alpha > 0.0) || !(*beta > 0.0))
            throw ConfigError("schedule.alpha and schedule.beta must be positive");
        if (p < 2.0) {
            const double bound = 1.0 / (2.0 - p);
            if (*alpha + *beta > bound * (1.0 + 1e-12))
                throw ConfigError("schedule.alpha + schedule.beta must not exceed 1/(2 - p)");
        }
    }

    if (needs_mesh()) {
        if (!mesh_n || *mesh_n < 1) throw ConfigError("mesh_n must be a positive integer");
        if (experiment == "lshape" && *mesh_n % 2 != 0)
            throw ConfigError("mesh_n must be even for the lshape experiment");
    }
    if (!max_iter || *max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(min_decrement >= 0.0)) throw ConfigError("min_decrement must be >= 0");
    if (!(K1 >= 0.0)) throw ConfigError("K1 must be >= 0");
    if (!(q_value() > p)) throw ConfigError("q must exceed p");
    if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ConfigError("cg_tol must lie in (0, 1)");
    if (output.empty()) throw ConfigError("output path must be set");
    if (experiment == "rate-study" && schedule_kind != "fixed")
        throw ConfigError("rate-study requires schedule.kind \"fixed\"");
}

inline Schedule ExperimentConfig::schedule() const {
    if (schedule_kind == "fixed") return Schedule::fixed(RelaxInterval(*eps_minus, *eps_plus));
    return Schedule::algebraic(*alpha, *beta, exponent());
}

namespace detail {

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open output file \"" + path + "\"");
        out_ << "n,eps_minus,eps_plus,J_eps_vn,J_vn,decrement,delta_measured,rho_n,G_n,gap_ref,"
                "cg_iters,cg_residual\n";
        out_.flush();
    }

    void write(const TraceRow& r) {
        out_ << r.n << ',' << csv_double(r.eps_minus) << ',' << csv_double(r.eps_plus) << ','
             << csv_double(r.J_eps_vn) << ',' << csv_double(r.J_vn) << ','
             << csv_double(r.decrement) << ','
             << (r.delta_measured ? csv_double(*r.delta_measured) : std::string()) << ','
             << csv_double(r.rho_n) << ',' << csv_double(r.G_n) << ','
             << (r.gap_ref ? csv_double(*r.gap_ref) : std::string()) << ',' << r.cg_iters << ','
             << csv_double(r.cg_residual) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

/// Scalar trace of the peak iteration: every row is evaluated from the
/// closed forms J_eps(alpha u) = pi (kappa(alpha) - alpha) and
/// J(alpha u) = pi (alpha^p / p - alpha), no linear solves involved.
inline IterationTrace run_peak_scalar(const ExperimentConfig& cfg) {
    const Exponent p = cfg.exponent();
    const Schedule schedule = cfg.schedule();
    const double pi = std::numbers::pi;
    const double q = cfg.q_value();
    const double reference = (1.0 / p.value() - 1.0) * pi;
    const auto J_eps_of = [&](double a, const RelaxInterval& eps) {
        return pi * (kappa(a, eps, p) - a);
    };

    IterationTrace trace;
    PeakState state;
    for (int n = 0; n < *cfg.max_iter; ++n) {
        const RelaxInterval eps = schedule_interval(schedule, n);
        TraceRow row;
        row.n = n;
        row.eps_minus = eps.eps_minus;
        row.eps_plus = eps.eps_plus;
        row.J_eps_vn = J_eps_of(state.alpha, eps);
        row.J_vn = pi * (std::pow(state.alpha, p.value()) / p.value() - state.alpha);
        row.rho_n = relaxation_rho(eps, p, q);
        row.G_n = row.J_eps_vn + cfg.K1 * row.rho_n;
        row.gap_ref = row.J_eps_vn - reference;
        const PeakState next = peak_step(state, eps, p);
        row.decrement = row.J_eps_vn - J_eps_of(next.alpha, eps);
        if (*row.gap_ref > 0.0) row.delta_measured = row.decrement / *row.gap_ref;
        trace.rows.push_back(row);
        state = next;
        if (schedule.kind() == Schedule::Kind::fixed && cfg.min_decrement > 0.0 &&
            row.decrement < cfg.min_decrement)
            break;
    }
    trace.final_field = {state.alpha};
    return trace;
}

template <ProblemDiscretization D>
int run_trace_experiment(const ExperimentConfig& cfg, Problem<D> problem) {
    detail::CsvWriter csv(cfg.output);
    RunOptions opts;
    opts.K1 = cfg.K1;
    opts.q = cfg.q_value();
    opts.cg_tol = cfg.cg_tol;
    opts.on_row = [&csv](const TraceRow& row) { csv.write(row); };

    std::optional<double> surrogate_ref;
    if (cfg.experiment == "rate-study") {
        // converge the same fixed-eps iteration far enough that its energy
        // serves as the reference minimizer for the measured gaps
        RunOptions deep = opts;
        deep.on_row = nullptr;
        const StoppingRule surrogate_stop(std::max(2000, 20 * *cfg.max_iter), 1e-13);
        const IterationTrace deep_trace = run(problem, cfg.schedule(), surrogate_stop, deep);
        if (deep_trace.aborted) {
            std::cerr << "rate-study surrogate solve failed: " << deep_trace.abort_message
                      << "\n";
            return 2;
        }
        surrogate_ref = problem.disc.relaxed_energy(
            deep_trace.final_field, schedule_interval(cfg.schedule(), 0), problem.p);
        problem.reference_energy = surrogate_ref;
    }

    const IterationTrace trace =
        run(problem, cfg.schedule(), StoppingRule(*cfg.max_iter, cfg.min_decrement), opts);
    if (trace.aborted) {
        std::cerr << "solver failure: " << trace.abort_message << " (partial trace kept in "
                  << cfg.output << ")\n";
        return 2;
    }
    std::cout << "wrote " << cfg.output << " (" << trace.rows.size() << " rows)\n";

    if (cfg.experiment == "rate-study") {
        std::vector<std::pair<int, double>> gaps;
        for (const auto& row : trace.rows)
            if (row.gap_ref) gaps.push_back({row.n, *row.gap_ref});
        try {
            const RateFit fit = fit_gap_sequence(gaps, FitMode::exponential);
            std::cout << "geometric fit over " << fit.points_used
                      << " rows: per-step ratio " << std::exp(fit.slope) << ", R^2 "
                      << fit.r_squared << " (reference energy " << csv_double(*surrogate_ref)
                      << ")\n";
        } catch (const std::invalid_argument& e) {
            std::cout << "geometric fit unavailable: " << e.what() << "\n";
        }
    }
    return 0;
}

} // namespace detail

/// Run one configured experiment; returns a process exit status. Trace
/// experiments stream rows to the CSV as they are produced, so a solver
/// failure still leaves the completed rows on disk.
inline int run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    if (cfg.experiment == "lemma-check") {
        std::vector<double> gammas;
        for (int k = 1; k <= 50; ++k) gammas.push_back(0.1 * k);
        const long n_max = cfg.max_iter ? static_cast<long>(*cfg.max_iter) : 10000;
        const LemmaScanReport report = check_algebraic_lemma(gammas, n_max);
        std::cout << "lemma scan over " << gammas.size() << " gammas, n <= " << n_max
                  << ": min slack " << detail::csv_double(report.min_slack) << " at gamma "
                  << report.gamma_at_min << ", n " << report.n_at_min << ", violations "
                  << report.violations << "\n";
        return report.violations == 0 ? 0 : 2;
    }

    if (cfg.experiment == "peak-scalar") {
        detail::CsvWriter csv(cfg.output);
        const IterationTrace trace = detail::run_peak_scalar(cfg);
        for (const auto& row : trace.rows) csv.write(row);
        std::cout << "wrote " << cfg.output << " (" << trace.rows.size() << " rows)\n";
        return 0;
    }

    const Exponent p = cfg.exponent();
    if (cfg.experiment == "peak") {
        Problem<PeakDiscretization> problem{
            PeakDiscretization(RadialMesh::uniform(static_cast<std::size_t>(*cfg.mesh_n))), p,
            peak_reference_energy(p)};
        return detail::run_trace_experiment(cfg, std::move(problem));
    }
    if (cfg.experiment == "square" || cfg.experiment == "rate-study") {
        Problem<MeshDiscretization> problem{
            MeshDiscretization(unit_square_mesh(*cfg.mesh_n),
                               LoadSpec::density([](double, double) { return 1.0; })),
            p, std::nullopt};
        return detail::run_trace_experiment(cfg, std::move(problem));
    }
    if (cfg.experiment == "square-zero") {
        Problem<MeshDiscretization> problem{
            MeshDiscretization(unit_square_mesh(*cfg.mesh_n),
                               LoadSpec::density([](double, double) { return 0.0; })),
            p, 0.0}; // zero load means the minimizer is 0 with J(u) = 0
        return detail::run_trace_experiment(cfg, std::move(problem));
    }
    // lshape
    Problem<MeshDiscretization> problem{
        MeshDiscretization(l_shape_mesh(*cfg.mesh_n),
                           LoadSpec::density([](double, double) { return 1.0; })),
        p, std::nullopt};
    return detail::run_trace_experiment(cfg, std::move(problem));
}

struct CsvRow {
    int n = 0;
    double eps_minus = 0, eps_plus = 0, J_eps_vn = 0, J_vn = 0, decrement = 0;
    std::optional<double> delta_measured;
    double rho_n = 0, G_n = 0;
    std::optional<double> gap_ref;
    long cg_iters = 0;
    double cg_residual = 0;
};

inline std::vector<CsvRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file \"" + path + "\"");
    std::string header;
    if (!std::getline(in, header) ||
        header != "n,eps_minus,eps_plus,J_eps_vn,J_vn,decrement,delta_measured,rho_n,G_n,gap_ref,"
                  "cg_iters,cg_residual")
        throw std::runtime_error("malformed CSV: unexpected header in \"" + path + "\"");
    std::vector<CsvRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 12) fields.push_back(""); // trailing empties
        if (fields.size() != 12)
            throw std::runtime_error("malformed CSV: wrong field count in \"" + path + "\"");
        try {
            CsvRow r;
            r.n = std::stoi(fields[0]);
            r.eps_minus = std::stod(fields[1]);
            r.eps_plus = std::stod(fields[2]);
            r.J_eps_vn = std::stod(fields[3]);
            r.J_vn = std::stod(fields[4]);
            r.decrement = std::stod(fields[5]);
            if (!fields[6].empty()) r.delta_measured = std::stod(fields[6]);
            r.rho_n = std::stod(fields[7]);
            r.G_n = std::stod(fields[8]);
            if (!fields[9].empty()) r.gap_ref = std::stod(fields[9]);
            r.cg_iters = std::stol(fields[10]);
            r.cg_residual = std::stod(fields[11]);
            rows.push_back(r);
        } catch (const std::exception&) {
            throw std::runtime_error("malformed CSV: unparsable row in \"" + path + "\"");
        }
    }
    if (rows.empty()) throw std::runtime_error("CSV \"" + path + "\" contains no data rows");
    return rows;
}

/// Text report over a recorded trace: final energies, fitted decay rates
/// when a reference gap column is present, and solver totals.
inline std::string summarize(const std::string& csv_path) {
    const std::vector<CsvRow> rows = read_trace_csv(csv_path);
    std::ostringstream os;
    os << csv_path << ": " << rows.size() << " rows, n = " << rows.front().n << ".."
       << rows.back().n << "\n";

    double j_min = rows.front().J_eps_vn, j_max = rows.front().J_eps_vn;
    long cg_total = 0;
    for (const auto& r : rows) {
        j_min = std::min(j_min, r.J_eps_vn);
        j_max = std::max(j_max, r.J_eps_vn);
        cg_total += r.cg_iters;
    }
    const double j_scale = std::max(std::abs(j_min), std::abs(j_max));
    if (j_max - j_min <= 1e-12 * std::max(1.0, j_scale))
        os << "J_eps_vn constant across steps: " << detail::csv_double(rows.front().J_eps_vn)
           << "\n";
    else
        os << "final J_eps_vn " << detail::csv_double(rows.back().J_eps_vn) << "\n";

    std::vector<std::pair<int, double>> gaps;
    for (const auto& r : rows)
        if (r.gap_ref) gaps.push_back({r.n, *r.gap_ref});
    if (!gaps.empty()) {
        os << "final gap " << detail::csv_double(gaps.back().second) << "\n";
        try {
            const RateFit expfit = fit_gap_sequence(gaps, FitMode::exponential);
            double tail = 0.0;
            const std::size_t k = std::min<std::size_t>(5, expfit.ratios.size());
            for (std::size_t i = expfit.ratios.size() - k; i < expfit.ratios.size(); ++i)
                tail += expfit.ratios[i];
            if (k > 0) tail /= static_cast<double>(k);
            os << "geometric fit: per-step ratio " << std::exp(expfit.slope) << ", R^2 "
               << expfit.r_squared << ", tail ratio " << tail << "\n";
        } catch (const std::invalid_argument&) {
            os << "geometric fit unavailable (fewer than 5 positive gaps)\n";
        }
        try {
            const RateFit algfit = fit_gap_sequence(gaps, FitMode::algebraic);
            os << "algebraic fit: log-log slope " << algfit.slope << ", R^2 "
               << algfit.r_squared << "\n";
        } catch (const std::invalid_argument&) {
            os << "algebraic fit unavailable (fewer than 5 positive gaps)\n";
        }
    }
    os << "total cg iterations " << cg_total << "\n";
    return os.str();
}

} // namespace kacanov
