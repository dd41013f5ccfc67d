// prenas: command-line driver for the predictor-assisted evolutionary search.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prenas/cli.hpp"

int main(int argc, char** argv) {
    using namespace prenas;
    using namespace prenas::cli;

    CLI::App app{"Predictor-assisted evolutionary cell search"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SearchOptions search;
    std::string seed_text;
    auto add_search_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", search.config, "INI config file (all keys optional)");
        cmd->add_option("--seed", seed_text, "Search seed");
        cmd->add_option("--out", search.out, "Output directory")->capture_default_str();
        cmd->add_option("--benchmark", search.benchmark, "Benchmark JSONL (default $PRENAS_DATA_DIR/nb201.jsonl)");
        cmd->add_option("--evaluator", search.evaluator, "oracle | synthetic | trainer");
        cmd->add_option("--strategy", search.strategy, "percentile | topk:k | random:n");
    };

    auto* search_cmd = app.add_subcommand("search", "Run one search");
    add_search_flags(search_cmd);

    ReplicateOptions rep;
    std::vector<std::string> seed_tokens;
    auto* rep_cmd = app.add_subcommand("replicate", "Run one search per seed and aggregate the finals");
    add_search_flags(rep_cmd);
    rep_cmd->add_option("--seeds", seed_tokens, "Seeds, e.g. 1,2,3 or 1-50")->delimiter(' ');
    rep_cmd->add_option("--jobs", rep.jobs, "Concurrent runs")->capture_default_str();

    PredictorEvalOptions pe;
    std::string features = "onehot";
    auto* pe_cmd = app.add_subcommand("predictor-eval", "Train/test Spearman of the forest and linear predictors");
    pe_cmd->add_option("--benchmark", pe.benchmark, "Benchmark JSONL (default $PRENAS_DATA_DIR/nb201.jsonl)");
    pe_cmd->add_option("--dataset", pe.dataset)->capture_default_str();
    pe_cmd->add_option("--train-n", pe.train_n)->capture_default_str();
    pe_cmd->add_option("--test-n", pe.test_n)->capture_default_str();
    pe_cmd->add_option("--repeats", pe.repeats)->capture_default_str();
    pe_cmd->add_option("--seed", pe.seed)->capture_default_str();
    pe_cmd->add_option("--features", features, "onehot | raw")->capture_default_str();
    pe_cmd->add_option("--trees", pe.forest.n_trees)->capture_default_str();

    std::string genotype, space = "nb201";
    auto* en_cmd = app.add_subcommand("enumerate", "List the one-step neighbourhood of a genotype");
    en_cmd->add_option("genotype", genotype, "Canonical genotype string")->required();
    en_cmd->add_option("--space", space, "nb201 | darts | darts+none")->capture_default_str();

    std::string raw, out_path;
    bool lenient = false;
    auto* in_cmd = app.add_subcommand("ingest", "Convert a CSV export to benchmark JSONL");
    in_cmd->add_option("raw", raw, "CSV with header genotype,dataset,val_acc,test_acc")->required();
    in_cmd->add_option("out", out_path, "Output JSONL")->required();
    in_cmd->add_flag("--lenient", lenient, "Skip bad rows instead of failing");
    in_cmd->add_option("--space", space, "nb201 | darts | darts+none")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (!seed_text.empty()) search.seed = std::stoull(seed_text);
    } catch (const std::exception&) {
        std::cerr << "error: malformed seed '" << seed_text << "'\n";
        return kConfigError;
    }

    if (*search_cmd) return cmd_search(search, std::cout, std::cerr);
    if (*rep_cmd) {
        try {
            rep.base = search;
            rep.seeds = parse_seed_list(seed_tokens);
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kConfigError;
        }
        return cmd_replicate(rep, std::cout, std::cerr);
    }
    if (*pe_cmd) {
        if (features == "raw")
            pe.features = FeatureMode::RawMatrix;
        else if (features != "onehot") {
            std::cerr << "error: unknown feature mode '" << features << "'\n";
            return kConfigError;
        }
        return cmd_predictor_eval(pe, std::cout, std::cerr);
    }
    if (*en_cmd) return cmd_enumerate(genotype, space, std::cout, std::cerr);
    if (*in_cmd) return cmd_ingest(raw, out_path, lenient, space, std::cout, std::cerr);
    return kConfigError;
}
