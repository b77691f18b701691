#include <CLI11.hpp>
#include <iostream>

#include "phasetr/config.hpp"
#include "phasetr/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"phasetr: homotopy trust-region optimizer for binary controls with "
                 "phase-field perimeter regularization"};
    app.require_subcommand(1);

    std::string run_path, check_path, validate_path;
    CLI::App* run = app.add_subcommand("run", "execute an experiment from a config file");
    run->add_option("config", run_path, "config file path")->required();
    CLI::App* check = app.add_subcommand(
        "check-gradient", "compare the adjoint gradient against central finite differences");
    check->add_option("config", check_path, "config file path")->required();
    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("config", validate_path, "config file path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const phasetr::RunConfig cfg = phasetr::load_config(run_path);
            return phasetr::run_experiment(cfg);
        }
        if (check->parsed()) {
            const phasetr::RunConfig cfg = phasetr::load_config(check_path);
            phasetr::check_gradient(cfg);
            return 0;
        }
        const phasetr::RunConfig cfg = phasetr::load_config(validate_path);
        (void)cfg;
        std::cout << "config ok\n";
        return 0;
    } catch (const phasetr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
