/**
 * @file cli.hpp
 * @brief Command implementations behind the `prenas` tool.
 *
 * Exit codes: 0 ok, 1 configuration or usage error, 2 data error,
 * 3 runtime error. Each failure prints a one-line diagnostic.
 */

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "prenas/config.hpp"
#include "prenas/error.hpp"
#include "prenas/evaluator.hpp"
#include "prenas/mutation.hpp"
#include "prenas/predictor.hpp"
#include "prenas/search.hpp"
#include "prenas/stats.hpp"

namespace prenas::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2, kRuntimeError = 3 };

struct SearchOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "prenas_run";
    std::string benchmark;
    std::string evaluator;
    std::string strategy;
};

inline RunConfig effective_config(const SearchOptions& o) {
    RunConfig c = load_run_config(o.config);
    if (o.seed) c.search.seed = *o.seed;
    if (!o.benchmark.empty()) c.evaluator.benchmark = o.benchmark;
    if (!o.evaluator.empty()) c.evaluator.kind = parse_evaluator_kind(o.evaluator);
    if (!o.strategy.empty()) c.search.strategy = SelectionStrategy::parse(o.strategy);
    if (c.evaluator.kind == EvaluatorKind::Oracle)
        c.evaluator.benchmark = resolve_benchmark_path(c.evaluator.benchmark);
    c.search.check();
    return c;
}

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline std::string percent(std::optional<double> v) {
    if (!v) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << *v * 100.0;
    return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

/// Runs `body`, mapping exceptions onto exit codes with a one-line message.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

/// One search with all artifacts written under `dir`.
inline SearchReport run_to_directory(const RunConfig& cfg, const EvaluatorInputs& inputs,
                                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["tool"] = "prenas";
    manifest["version"] = kVersion;
    manifest["started"] = utc_timestamp();
    manifest["seed"] = cfg.search.seed;
    manifest["config"] = to_json(cfg);
    manifest["artifacts"] = {{"history", "history.jsonl"}, {"summary", "summary.csv"}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    auto evaluator = make_evaluator(cfg, inputs);
    SearchReport report = run_search(cfg.search, *evaluator);

    std::ostringstream history, summary;
    write_history_jsonl(report, history);
    write_summary_csv(report, summary);
    write_text(dir / "history.jsonl", history.str());
    write_text(dir / "summary.csv", summary.str());
    return report;
}

}  // namespace detail

inline int cmd_search(const SearchOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const RunConfig cfg = effective_config(o);
        const EvaluatorInputs inputs = prepare_evaluator_inputs(cfg);
        const SearchReport r = detail::run_to_directory(cfg, inputs, o.out);
        out << "best " << r.best.key << " val=" << detail::percent(r.best.true_fitness)
            << " test=" << detail::percent(r.best.test_acc) << '\n';
        out << "true_evaluations " << r.true_evaluations << '\n';
        return kOk;
    });
}

// ---------------------------------------------------------------------------

struct PredictorEvalOptions {
    std::string benchmark;
    std::string dataset = "cifar10";
    int train_n = 100;
    int test_n = 100;
    int repeats = 100;
    std::uint64_t seed = 0;
    FeatureMode features = FeatureMode::OneHot;
    ForestParams forest;
};

struct PredictorEvalResult {
    std::vector<double> forest;  // per-repeat test Spearman
    std::vector<double> linear;
};

/// Disjoint random train/test draws from the table; Spearman of each
/// predictor on the test draw, per repeat.
inline PredictorEvalResult evaluate_predictors(const OracleTable& table, const PredictorEvalOptions& o) {
    std::vector<std::string> keys = table.keys(o.dataset);
    if (o.train_n < 2 || o.test_n < 2) throw ConfigError("train-n and test-n must be >= 2");
    if (o.repeats < 1) throw ConfigError("repeats must be >= 1");
    if (static_cast<std::size_t>(o.train_n + o.test_n) > keys.size())
        throw DataError("train-n + test-n = " + std::to_string(o.train_n + o.test_n) + " exceeds the " +
                        std::to_string(keys.size()) + " genotypes available for " + o.dataset +
                        " (train and test would overlap)");
    PredictorEvalResult res;
    const SearchSpace& space = table.space();
    for (int r = 0; r < o.repeats; ++r) {
        Rng rng = make_rng(o.seed, static_cast<std::uint64_t>(r));
        const std::size_t need = static_cast<std::size_t>(o.train_n + o.test_n);
        for (std::size_t k = 0; k < need; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, keys.size() - 1);
            std::swap(keys[k], keys[pick(rng)]);
        }
        TrainingSet train;
        train.mode = o.features;
        for (int i = 0; i < o.train_n; ++i) {
            const auto& k = keys[static_cast<std::size_t>(i)];
            train.add(parse_string(k, space), table.find(k, o.dataset)->val_acc);
        }
        ForestParams fp = o.forest;
        fp.seed = derive_seed(o.seed, 0x7e0000ULL + static_cast<std::uint64_t>(r));
        const Forest forest = fit_forest(train, fp);
        const LinearModel linear = fit_linear(train);

        std::vector<double> truth, pf, pl;
        for (int i = 0; i < o.test_n; ++i) {
            const auto& k = keys[static_cast<std::size_t>(o.train_n + i)];
            const Genotype g = parse_string(k, space);
            truth.push_back(table.find(k, o.dataset)->val_acc);
            pf.push_back(predict(forest, g));
            pl.push_back(predict_linear(linear, g));
        }
        if (auto s = spearman(pf, truth)) res.forest.push_back(*s);
        if (auto s = spearman(pl, truth)) res.linear.push_back(*s);
    }
    return res;
}

inline void write_predictor_csv(const PredictorEvalResult& r, std::ostream& out) {
    out << "predictor,mean_spearman,std_spearman,min,max,repeats\n";
    auto row = [&](const char* name, const std::vector<double>& v) {
        out << name << ',';
        if (v.empty()) {
            out << ",,,,0\n";
            return;
        }
        const RunSummary s = summarize_runs(v);
        out << std::fixed << std::setprecision(4) << s.mean << ',' << s.std << ',' << s.min << ',' << s.max << ','
            << s.n << '\n';
        out.unsetf(std::ios::floatfield);
    };
    row("random_forest", r.forest);
    row("linear", r.linear);
}

inline int cmd_predictor_eval(const PredictorEvalOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const OracleTable table = load_benchmark(resolve_benchmark_path(o.benchmark));
        write_predictor_csv(evaluate_predictors(table, o), out);
        return kOk;
    });
}

// ---------------------------------------------------------------------------

inline int cmd_enumerate(const std::string& genotype, const std::string& space_name, std::ostream& out,
                         std::ostream& err) {
    try {
        const SearchSpace& space = space_from_name(space_name);
        const Genotype parent = parse_string(genotype, space);
        const auto children = neighborhood(parent);
        for (const auto& c : children) out << canonical_string(c.genotype) << '\t' << to_string(c.record) << '\n';
        out << "count " << children.size() << '\n';
        return kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

// ---------------------------------------------------------------------------

namespace detail {

/// Splits one CSV record, honouring double quotes. Unquoted genotype strings
/// containing commas are rejoined by the caller.
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted) throw DataError("unterminated quote");
    return fields;
}

inline double parse_percent(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        if (!(v >= 0.0 && v <= 100.0)) throw DataError(std::string(what) + " out of range");
        return v;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception&) {
        throw DataError(std::string("malformed ") + what + " '" + text + "'");
    }
}

}  // namespace detail

struct IngestStats {
    std::size_t entries = 0;
    std::size_t rejected = 0;
    std::vector<std::string> messages;
};

/// CSV (genotype,dataset,val_acc,test_acc) -> canonical JSONL rows.
inline IngestStats ingest_csv(std::istream& in, std::ostream& out, const SearchSpace& space) {
    IngestStats st;
    std::string line;
    std::size_t lineno = 0;
    std::set<std::pair<std::string, std::string>> seen;
    bool header_done = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto f = detail::split_csv(line);
            if (f.size() > 4) {
                // Unquoted genotype with embedded commas.
                std::string g = f[0];
                for (std::size_t i = 1; i + 3 < f.size(); ++i) g += ',' + f[i];
                f = {g, f[f.size() - 3], f[f.size() - 2], f[f.size() - 1]};
            }
            if (f.size() != 4) throw DataError("expected 4 fields, got " + std::to_string(f.size()));
            if (!header_done) {
                header_done = true;
                if (f[0] == "genotype" && f[1] == "dataset" && f[2] == "val_acc" && f[3] == "test_acc") continue;
                throw DataError("missing header genotype,dataset,val_acc,test_acc");
            }
            BenchmarkRow row;
            try {
                row.genotype = canonical_string(parse_string(f[0], space));
            } catch (const ParseError& e) {
                throw DataError(e.what());
            }
            if (f[1].empty()) throw DataError("empty dataset label");
            row.dataset = f[1];
            row.val_pct = detail::parse_percent(f[2], "val_acc");
            row.test_pct = detail::parse_percent(f[3], "test_acc");
            if (!seen.insert({row.genotype, row.dataset}).second)
                throw DataError("duplicate (genotype,dataset) " + row.genotype + "," + row.dataset);
            out << to_benchmark_json(row) << '\n';
            ++st.entries;
        } catch (const DataError& e) {
            ++st.rejected;
            st.messages.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return st;
}

inline int cmd_ingest(const std::string& raw, const std::string& out_path, bool lenient, const std::string& space_name,
                      std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const SearchSpace& space = space_from_name(space_name);
        std::ifstream in(raw);
        if (!in) throw DataError("cannot open raw export '" + raw + "'");
        std::ostringstream body;
        const IngestStats st = ingest_csv(in, body, space);
        if (st.rejected > 0 && !lenient) {
            err << "error: " << st.messages.front() << " (" << st.rejected
                << " rejected line(s); use --lenient to skip)\n";
            return static_cast<int>(kDataError);
        }
        detail::write_text(out_path, body.str());
        for (const auto& m : st.messages) err << "skipped " << m << '\n';
        out << "entries " << st.entries << '\n' << "rejected " << st.rejected << '\n';
        return static_cast<int>(kOk);
    });
}

// ---------------------------------------------------------------------------

struct ReplicateOptions {
    SearchOptions base;
    std::vector<std::uint64_t> seeds;
    int jobs = 1;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string best;
    double best_val = 0;
    std::optional<double> best_test;
    std::size_t true_evaluations = 0;
    std::string message;
};

/// "1,2,7-9" -> {1, 2, 7, 8, 9}.
inline std::vector<std::uint64_t> parse_seed_list(const std::vector<std::string>& tokens) {
    std::vector<std::uint64_t> seeds;
    for (const auto& tok : tokens) {
        std::stringstream ss(tok);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            try {
                auto dash = item.find('-');
                if (dash == std::string::npos) {
                    seeds.push_back(std::stoull(item));
                } else {
                    const auto lo = std::stoull(item.substr(0, dash));
                    const auto hi = std::stoull(item.substr(dash + 1));
                    if (hi < lo) throw std::invalid_argument(item);
                    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
                }
            } catch (const std::exception&) {
                throw ConfigError("malformed seed '" + item + "'");
            }
        }
    }
    return seeds;
}

inline int cmd_replicate(const ReplicateOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (o.seeds.empty()) throw ConfigError("no seeds given");
        const RunConfig base = effective_config(o.base);
        const EvaluatorInputs inputs = prepare_evaluator_inputs(base);
        const std::filesystem::path root = o.base.out;
        std::filesystem::create_directories(root);

        std::vector<SeedOutcome> outcomes(o.seeds.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < o.seeds.size(); i = next++) {
                SeedOutcome& so = outcomes[i];
                so.seed = o.seeds[i];
                try {
                    RunConfig cfg = base;
                    cfg.search.seed = so.seed;
                    const SearchReport r =
                        detail::run_to_directory(cfg, inputs, root / ("seed_" + std::to_string(so.seed)));
                    so.ok = true;
                    so.best = r.best.key;
                    so.best_val = r.best.true_fitness;
                    so.best_test = r.best.test_acc;
                    so.true_evaluations = r.true_evaluations;
                } catch (const std::exception& e) {
                    so.message = e.what();
                }
            }
        };
        const int jobs = std::max(1, o.jobs);
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }

        std::ostringstream finals;
        finals << "seed,status,best_genotype,best_val,best_test,true_evaluations,message\n";
        std::vector<double> vals, tests;
        for (const auto& so : outcomes) {
            finals << so.seed << ',' << (so.ok ? "ok" : "failed") << ",\"" << so.best << "\","
                   << (so.ok ? detail::percent(so.best_val) : "") << ',' << (so.ok ? detail::percent(so.best_test) : "")
                   << ',' << so.true_evaluations << ",\"" << so.message << "\"\n";
            if (!so.ok) {
                err << "seed " << so.seed << " failed: " << so.message << '\n';
                continue;
            }
            vals.push_back(so.best_val * 100.0);
            if (so.best_test) tests.push_back(*so.best_test * 100.0);
        }
        detail::write_text(root / "finals.csv", finals.str());
        if (vals.empty()) {
            err << "error: all " << outcomes.size() << " runs failed\n";
            return static_cast<int>(kRuntimeError);
        }

        std::ostringstream agg;
        agg << "metric,mean,std,min,max,runs\n" << std::fixed << std::setprecision(4);
        auto row = [&](const char* name, const std::vector<double>& v) {
            if (v.empty()) return;
            const RunSummary s = summarize_runs(v);
            agg << name << ',' << s.mean << ',' << s.std << ',' << s.min << ',' << s.max << ',' << s.n << '\n';
        };
        row("best_val", vals);
        row("best_test", tests);
        detail::write_text(root / "aggregate.csv", agg.str());
        out << agg.str();
        return static_cast<int>(kOk);
    });
}

}  // namespace prenas::cli
