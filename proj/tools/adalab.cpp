// Command-line front end: federated training runs, gradient dumps,
// leakage attacks, the defense-efficacy table and the numeric
// verification suite.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ada/config.hpp"
#include "ada/experiment.hpp"
#include "ada/verify.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config_path, "run configuration file");
    if (config_required) c->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "seed override")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_option("--threads", o.threads, "worker threads (currently 1 supported)")
        ->check(CLI::PositiveNumber);
}

ada::ExperimentConfig load_experiment(const CommonOpts& o) {
    ada::Config cfg = ada::Config::load(o.config_path);
    ada::ExperimentConfig e = ada::parse_experiment(cfg);
    if (o.seed_set) e.seed = o.seed;
    return e;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adalab: federated gradient stand-in laboratory"};
    app.require_subcommand(1);

    CommonOpts train_o, dump_o, attack_o, exp_o, verify_o;
    std::string dump_dir = "out";

    auto* train = app.add_subcommand("train", "run a federated training job, emit history CSV");
    add_common(train, train_o, true);
    auto* dump = app.add_subcommand("dump-grads", "emit round-1 gradient dumps per client");
    add_common(dump, dump_o, true);
    auto* attack = app.add_subcommand("attack", "run attacks against gradient dumps");
    add_common(attack, attack_o, true);
    attack->add_option("--dumps", dump_dir, "directory containing gradient dumps")->required();
    auto* experiment =
        app.add_subcommand("experiment", "end-to-end defense-efficacy table (CSV + PGM)");
    add_common(experiment, exp_o, true);
    auto* verify = app.add_subcommand("verify", "run the derivative-analysis checks");
    add_common(verify, verify_o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            ada::run_train(load_experiment(train_o), train_o.out_dir);
        } else if (dump->parsed()) {
            ada::run_dump_grads(load_experiment(dump_o), dump_o.out_dir);
        } else if (attack->parsed()) {
            ada::run_attack_cmd(load_experiment(attack_o), dump_dir, attack_o.out_dir);
        } else if (experiment->parsed()) {
            ada::run_experiment(load_experiment(exp_o), exp_o.out_dir);
        } else if (verify->parsed()) {
            return ada::print_verify_report(ada::verify_appendix());
        }
    } catch (const ada::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
