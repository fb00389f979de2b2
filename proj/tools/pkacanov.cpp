// Experiment runner for the relaxed Kacanov p-Poisson solver.
//
//   pkacanov run --config exp.json     run one experiment, write its CSV trace
//   pkacanov summarize --csv out.csv   print rate / gap statistics of a trace
//   pkacanov lemma-check [--nmax N]    scan the algebraic difference inequality

#include "kacanov/experiment.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"relaxed Kacanov iteration for the p-Poisson problem"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
    run_cmd->add_option("--config", config_path, "path to the experiment config")->required();

    std::string csv_path;
    CLI::App* sum_cmd = app.add_subcommand("summarize", "summarize a recorded CSV trace");
    sum_cmd->add_option("--csv", csv_path, "path to the CSV trace")->required();

    long nmax = 10000;
    CLI::App* lemma_cmd =
        app.add_subcommand("lemma-check", "scan the algebraic difference inequality");
    lemma_cmd->add_option("--nmax", nmax, "largest n to scan")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const kacanov::ExperimentConfig cfg =
                kacanov::ExperimentConfig::from_json_file(config_path);
            return kacanov::run_experiment(cfg);
        }
        if (sum_cmd->parsed()) {
            std::cout << kacanov::summarize(csv_path);
            return 0;
        }
        std::vector<double> gammas;
        for (int k = 1; k <= 50; ++k) gammas.push_back(0.1 * k);
        const kacanov::LemmaScanReport report = kacanov::check_algebraic_lemma(gammas, nmax);
        std::cout << "lemma scan over " << gammas.size() << " gammas, n <= " << nmax
                  << ": min slack " << report.min_slack << " at gamma " << report.gamma_at_min
                  << ", n " << report.n_at_min << ", violations " << report.violations << "\n";
        return report.violations == 0 ? 0 : 2;
    } catch (const kacanov::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
