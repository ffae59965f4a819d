#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kan/errors.hpp"
#include "kan/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Continual sentiment-classification experiments"};
    app.require_subcommand(1);

    std::string corpus_dir, prepare_out;
    uint64_t prepare_seed = 0;
    auto* prepare = app.add_subcommand("prepare",
                                       "Tokenize, split, and index a corpus");
    prepare->add_option("--corpus", corpus_dir, "Directory of task files")
        ->required();
    prepare->add_option("--out", prepare_out, "Output directory")->required();
    prepare->add_option("--seed", prepare_seed, "Split seed");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Execute a configured experiment");
    run->add_option("--config", config_path, "JSON run config")->required();

    std::string run_dir;
    auto* report = app.add_subcommand("report",
                                      "Summarize a finished run directory");
    report->add_option("--run", run_dir, "Run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) {
            kan::cmd_prepare(corpus_dir, prepare_out, prepare_seed);
            std::cout << "prepared corpus written to " << prepare_out << '\n';
        } else if (run->parsed()) {
            const auto config = kan::load_run_config(config_path);
            kan::cmd_run(config);
            kan::cmd_report(config.out_dir, std::cout);
        } else if (report->parsed()) {
            kan::cmd_report(run_dir, std::cout);
        }
    } catch (const kan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const kan::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const kan::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
