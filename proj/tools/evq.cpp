// evq: synthesize data, analyze behaviour, train, evaluate and compare
// against the exact optimum.

#include <cstdio>
#include <exception>

#include "CLI11.hpp"

#include "evq/app.hpp"

int main(int argc, char** argv) {
    using namespace evq;
    app::Options o;
    CLI::App cli{"EV charging simulation, learning and evaluation toolkit"};
    cli.require_subcommand(1);
    cli.fallthrough();

    cli.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cli.add_option("--days", o.days, "synthetic days per house");
    cli.add_option("--houses", o.houses, "synthetic house count");
    cli.add_option("--mode", o.mode, "learner: dqn, ndqn or madqn")
        ->check(CLI::IsMember({"dqn", "ndqn", "madqn"}));
    cli.add_option("--n-step", o.n_step, "return horizon for ndqn");
    cli.add_option("--epochs", o.epochs, "training epochs");
    cli.add_option("--seed", o.seed, "seed for data synthesis and training");
    cli.add_option("--out", o.out, "output directory");
    cli.add_option("--models", o.models, "directory holding trained models");
    cli.add_option("--split", o.split, "evaluation split")->check(CLI::IsMember({"train", "test"}));
    cli.add_option("--verify-T", o.verify_T, "cross-check the optimum against brute force on T-slot prefixes");
    cli.add_flag("--emit-traces", o.emit_traces, "write per-slot schedule CSVs");
    cli.add_option("--jobs", o.jobs, "parallel episode evaluations")->check(CLI::PositiveNumber);
    cli.add_flag("--per-weekday", o.per_weekday, "also emit per-weekday frequency profiles");

    auto* synth = cli.add_subcommand("synth", "write a synthetic dataset CSV");
    auto* analyze = cli.add_subcommand("analyze", "charging-frequency and cost profiles");
    auto* train = cli.add_subcommand("train", "train DQN agents");
    auto* eval = cli.add_subcommand("eval", "evaluate schedules and baselines");
    auto* oracle = cli.add_subcommand("oracle", "compare policy returns with the exact optimum");

    CLI11_PARSE(cli, argc, argv);

    try {
        const RunConfig cfg = app::resolve_config(o);
        if (synth->parsed()) app::cmd_synth(cfg);
        else if (analyze->parsed()) app::cmd_analyze(cfg, o.per_weekday);
        else if (train->parsed()) app::cmd_train(cfg, o.mode);
        else if (eval->parsed()) app::cmd_eval(cfg, o);
        else if (oracle->parsed()) app::cmd_oracle(cfg, o);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "evq: %s\n", e.what());
        return 1;
    }
    return 0;
}
