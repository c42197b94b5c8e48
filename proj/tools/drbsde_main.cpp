#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "drbsde/parallel.hpp"
#include "drbsde/runner.hpp"

namespace {

int worker_count_from_env() {
    const char* env = std::getenv("DRBSDE_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflected BSDE solver and game option pricer"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    bool have_seed = false;
    std::uint64_t seed_override = 0;

    for (const char* name : {"solve", "converge", "compare", "price"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_override, "output directory (overrides config)");
        sub->add_option("--seed", seed_override, "simulation seed (overrides config)")
            ->each([&](const std::string&) { have_seed = true; });
    }

    CLI11_PARSE(app, argc, argv);
    drbsde::parallel::set_threads(worker_count_from_env());

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read config file '" << config_path << "'\n";
            return 2;
        }
        std::stringstream buffer;
        buffer << in.rdbuf();

        drbsde::RunConfig cfg = drbsde::parse_run_config(buffer.str());
        if (have_seed) cfg.seed = seed_override;
        const std::string out_dir = out_override.empty() ? cfg.out_dir : out_override;

        const auto cmd = drbsde::parse_command(app.get_subcommands().front()->get_name());
        drbsde::run_command(cmd, cfg, out_dir);
        return 0;
    } catch (const drbsde::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
