// emgram: command-line front end for empirical Gramian computation,
// Gramian-based model reduction, and the built-in benchmarks.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "emgram/bench.hpp"
#include "emgram/gramian.hpp"
#include "emgram/io.hpp"
#include "emgram/plot.hpp"
#include "emgram/reduce.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

int default_threads() {
    if (const char* env = std::getenv("EMGRAM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

std::array<int, 12> parse_nf(const std::string& text) {
    std::array<int, 12> nf{};
    if (text.empty()) return nf;
    std::stringstream ss(text);
    std::string cell;
    std::size_t i = 0;
    while (std::getline(ss, cell, ',')) {
        if (i >= 12) throw emgram::config_error("--nf: expected exactly 12 comma-separated flags");
        nf[i++] = std::stoi(cell);
    }
    if (i != 12) throw emgram::config_error("--nf: expected exactly 12 comma-separated flags");
    return nf;
}

emgram::InputSpec parse_input(const std::string& text) {
    emgram::InputSpec spec;
    if (text == "impulse" || text.empty()) {
        spec.kind = emgram::SignalKind::Impulse;
    } else if (text.rfind("prbs", 0) == 0) {
        spec.kind = emgram::SignalKind::PseudoRandomBinary;
        const auto colon = text.find(':');
        if (colon != std::string::npos) spec.seed = std::stoull(text.substr(colon + 1));
    } else if (text == "chirp") {
        spec.kind = emgram::SignalKind::Chirp;
    } else {
        throw emgram::config_error("--input: expected impulse | prbs:<seed> | chirp");
    }
    return spec;
}

std::string input_name(const emgram::InputSpec& spec) {
    switch (spec.kind) {
        case emgram::SignalKind::Impulse: return "impulse";
        case emgram::SignalKind::PseudoRandomBinary:
            return "prbs:" + std::to_string(spec.seed);
        case emgram::SignalKind::Chirp: return "chirp";
        default: return "custom";
    }
}

/// Orders spec: comma list, entries "a", "a..b" or "a..b..step".
std::vector<emgram::Index> parse_orders(const std::string& text, emgram::Index n) {
    std::vector<emgram::Index> orders;
    if (text.empty()) {
        for (emgram::Index k = 1; k <= n; ++k) orders.push_back(k);
        return orders;
    }
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto dots = cell.find("..");
        if (dots == std::string::npos) {
            orders.push_back(std::stoll(cell));
            continue;
        }
        const emgram::Index lo = std::stoll(cell.substr(0, dots));
        std::string rest = cell.substr(dots + 2);
        emgram::Index step = 1;
        const auto dots2 = rest.find("..");
        if (dots2 != std::string::npos) {
            step = std::stoll(rest.substr(dots2 + 2));
            rest = rest.substr(0, dots2);
        }
        const emgram::Index hi = std::stoll(rest);
        if (step < 1 || hi < lo) throw emgram::config_error("--orders: bad range " + cell);
        for (emgram::Index k = lo; k <= hi; k += step) orders.push_back(k);
    }
    for (emgram::Index k : orders) {
        if (k < 1 || k > n) throw emgram::config_error("--orders: order out of range [1, N]");
    }
    return orders;
}

nlohmann::json grid_json(const emgram::TimeGrid& grid) {
    return {{"dt", grid.h}, {"horizon", grid.horizon}};
}

nlohmann::json conventions_json() {
    return {
        {"quadrature", "rectangle rule over the rightmost K of K+1 samples"},
        {"impulse", "amplitude 1/dt on the first step"},
        {"chirp", "exponential sweep from 1/(2 dt) to 1/horizon, unit amplitude"},
        {"solver", "SSP-RK2 low-storage, zero-order-hold input at step start"},
        {"gauss_bell", "t0 = horizon/10, s = horizon/50"},
        {"svd_signs", "largest-magnitude entry of each singular vector positive"},
        {"csv", "17 significant digits"},
    };
}

void write_metadata(const std::filesystem::path& dir, const nlohmann::json& doc) {
    emgram::write_json(doc, (dir / "metadata.json").string());
}

std::filesystem::path out_dir_of(const std::string& out) {
    auto dir = std::filesystem::path(out).parent_path();
    return dir.empty() ? std::filesystem::path(".") : dir;
}

int run(int argc, char** argv) {
    CLI::App app{"empirical Gramian computation and model reduction"};
    app.require_subcommand(1);

    // ---- shared option storage
    std::string system_path, out_path = "out.csv", nf_text, input_text = "impulse";
    std::string partition_text, pr_path;
    double dt = 0.01, horizon = 1.0;
    int stages = 3;
    int threads = default_threads();
    bool deterministic = true;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--dt", dt, "time step h");
        cmd->add_option("--horizon", horizon, "time horizon T");
        cmd->add_option("--stages", stages, "SSP-RK stage count (>= 2)");
        cmd->add_option("--input", input_text, "impulse | prbs:<seed> | chirp");
        cmd->add_option("--threads", threads, "worker threads (EMGRAM_THREADS fallback)");
        cmd->add_flag("--deterministic,!--no-deterministic", deterministic,
                      "fixed-order reduction (default on)");
        cmd->add_option("--out", out_path, "output path");
    };

    // ---- gramian
    auto* gramian = app.add_subcommand("gramian", "compute an empirical Gramian");
    std::string kind_text = "x";
    gramian->add_option("--kind", kind_text, "c|o|x|y|s|i|j")->required();
    gramian->add_option("--system", system_path, "system descriptor JSON")->required();
    gramian->add_option("--nf", nf_text, "12 comma-separated option flags");
    gramian->add_option("--partition", partition_text, "W:I sets nf(11)=W, nf(12)=I");
    gramian->add_option("--pr", pr_path, "parameter sample columns CSV");
    add_common(gramian);

    // ---- reduce
    auto* reduce = app.add_subcommand("reduce", "reduce a system from Gramian CSVs");
    std::string method = "dt", wx_path, wc_path, wo_path, orders_text;
    reduce->add_option("--method", method, "bt | dt")->required();
    reduce->add_option("--system", system_path, "system descriptor JSON")->required();
    reduce->add_option("--gramian", wx_path, "cross Gramian CSV (dt)");
    reduce->add_option("--wc", wc_path, "controllability Gramian CSV (bt)");
    reduce->add_option("--wo", wo_path, "observability Gramian CSV (bt)");
    reduce->add_option("--orders", orders_text, "orders: list / a..b / a..b..step");
    add_common(reduce);

    // ---- bench
    auto* bench = app.add_subcommand("bench", "run a built-in benchmark");
    std::string bench_kind;
    emgram::Index bench_n = 256;
    emgram::Index bench_m = 4;
    std::uint64_t seed = 1;
    int samples = 10;
    bool grid_set = false;
    bench->add_option("kind", bench_kind, "linear | transport | network")->required();
    bench->add_option("--n", bench_n, "state dimension");
    bench->add_option("--m", bench_m, "input/output count");
    bench->add_option("--seed", seed, "generator seed");
    bench->add_option("--samples", samples, "parameter Monte-Carlo samples");
    bench->add_option("--orders", orders_text, "orders: list / a..b / a..b..step");
    bench->add_option("--dt", dt, "time step h")->each([&](const std::string&) {
        grid_set = true;
    });
    bench->add_option("--horizon", horizon, "time horizon T")->each([&](const std::string&) {
        grid_set = true;
    });
    bench->add_option("--threads", threads, "worker threads (EMGRAM_THREADS fallback)");
    bench->add_flag("--deterministic,!--no-deterministic", deterministic,
                    "fixed-order reduction (default on)");
    std::string bench_out = ".";
    bench->add_option("--out", bench_out, "output directory");

    // ---- version
    auto* version = app.add_subcommand("version", "print the artifact version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (version->parsed()) {
        std::cout << kVersion << "\n";
        return 0;
    }

    if (gramian->parsed()) {
        emgram::LinearSystem lin = emgram::load_system(system_path);
        emgram::TimeGrid grid(dt, horizon);
        emgram::GramianConfig cfg;
        cfg.nf.v = parse_nf(nf_text);
        if (!partition_text.empty()) {
            const auto colon = partition_text.find(':');
            if (colon == std::string::npos) {
                throw emgram::config_error("--partition: expected W:I");
            }
            cfg.nf.v[10] = std::stoi(partition_text.substr(0, colon));
            cfg.nf.v[11] = std::stoi(partition_text.substr(colon + 1));
        }
        cfg.ut = parse_input(input_text);
        if (!pr_path.empty()) cfg.pr = emgram::read_csv(pr_path);
        cfg.solver.stages = stages;
        cfg.threads = threads;
        const emgram::GramianKind kind = emgram::kind_from_char(kind_text.at(0));
        emgram::GramianResult result = emgram::empirical_gramian(lin, grid, kind, cfg);
        emgram::write_csv(result.primary, out_path);
        std::string companion_path;
        if (result.companion) {
            std::filesystem::path p(out_path);
            companion_path = (p.parent_path() / (p.stem().string() + "_companion.csv")).string();
            emgram::write_csv(*result.companion, companion_path);
        }
        nlohmann::json meta = {
            {"command", "gramian"},
            {"version", kVersion},
            {"kind", kind_text},
            {"system", system_path},
            {"grid", grid_json(grid)},
            {"nf", cfg.nf.v},
            {"input", input_name(cfg.ut)},
            {"stages", stages},
            {"threads", threads},
            {"deterministic", deterministic},
            {"out", out_path},
            {"companion", companion_path},
            {"conventions", conventions_json()},
        };
        write_metadata(out_dir_of(out_path), meta);
        return 0;
    }

    if (reduce->parsed()) {
        emgram::LinearSystem lin = emgram::load_system(system_path);
        emgram::TimeGrid grid(dt, horizon);
        const emgram::Index n = lin.states();
        std::vector<emgram::Index> orders = parse_orders(orders_text, n);

        emgram::InputSpec ispec = parse_input(input_text);
        emgram::InputSignal sig = ispec.make(lin.inputs(), grid);
        emgram::InputFunction u = [&sig](double t) { return sig.evaluate(t); };
        emgram::SolverConfig solver;
        solver.stages = stages;
        emgram::SystemModel fom = lin.to_system();
        emgram::Trajectory y =
            emgram::solve(fom, grid, emgram::Vector::Zero(n), u, emgram::Vector(), solver);
        emgram::Matrix utab(lin.inputs(), grid.steps());
        for (emgram::Index k = 0; k < grid.steps(); ++k) utab.col(k) = u(grid.time(k));
        const double unorm = std::sqrt(grid.h * utab.squaredNorm());

        auto project = [&](emgram::Index order) -> emgram::RomProjection {
            if (method == "bt") {
                if (wc_path.empty() || wo_path.empty()) {
                    throw emgram::config_error("reduce: bt needs --wc and --wo");
                }
                return emgram::balance_square_root(emgram::read_csv(wc_path),
                                                   emgram::read_csv(wo_path), order);
            }
            if (method == "dt") {
                if (wx_path.empty()) throw emgram::config_error("reduce: dt needs --gramian");
                return emgram::direct_truncation(emgram::read_csv(wx_path), order);
            }
            throw emgram::config_error("reduce: --method must be bt or dt");
        };

        emgram::ErrorTable table;
        table.columns = {"order", "l2_error", "bound"};
        table.data.resize(static_cast<emgram::Index>(orders.size()), 3);
        for (std::size_t i = 0; i < orders.size(); ++i) {
            emgram::RomProjection proj = project(orders[i]);
            emgram::LinearSystem rom = emgram::reduce_linear(lin, proj);
            emgram::Trajectory yr = emgram::solve(rom.to_system(), grid,
                                                  emgram::Vector::Zero(orders[i]), u,
                                                  emgram::Vector(), solver);
            table.data(static_cast<emgram::Index>(i), 0) = static_cast<double>(orders[i]);
            table.data(static_cast<emgram::Index>(i), 1) = emgram::l2_error(y, yr, grid);
            table.data(static_cast<emgram::Index>(i), 2) =
                emgram::bt_bound(proj.singular_values, orders[i], unorm);
        }
        emgram::write_csv(table.data, out_path, table.columns);
        nlohmann::json meta = {
            {"command", "reduce"},
            {"version", kVersion},
            {"method", method},
            {"system", system_path},
            {"grid", grid_json(grid)},
            {"input", input_name(ispec)},
            {"stages", stages},
            {"threads", threads},
            {"deterministic", deterministic},
            {"out", out_path},
            {"conventions", conventions_json()},
        };
        write_metadata(out_dir_of(out_path), meta);
        return 0;
    }

    // bench
    emgram::BenchmarkSpec spec;
    if (bench_kind == "linear") {
        spec.kind = emgram::BenchmarkKind::LinearSymmetric;
        spec.grid = grid_set ? emgram::TimeGrid(dt, horizon) : emgram::TimeGrid(0.01, 10.0);
    } else if (bench_kind == "transport") {
        spec.kind = emgram::BenchmarkKind::Transport;
        spec.grid = grid_set ? emgram::TimeGrid(dt, horizon) : emgram::TimeGrid(0.002, 2.0);
    } else if (bench_kind == "network") {
        spec.kind = emgram::BenchmarkKind::TanhNetwork;
        spec.grid = grid_set ? emgram::TimeGrid(dt, horizon) : emgram::TimeGrid(0.01, 10.0);
    } else {
        throw emgram::config_error("bench: kind must be linear | transport | network");
    }
    spec.n = bench_n;
    spec.m = bench_m;
    spec.seed = seed;
    spec.samples = samples;
    spec.threads = threads;
    if (!orders_text.empty()) spec.orders = parse_orders(orders_text, bench_n);
    std::filesystem::create_directories(bench_out);
    emgram::ErrorTable table = emgram::run_benchmark(spec);
    const auto dir = std::filesystem::path(bench_out);
    emgram::write_csv(table.data, (dir / "errors.csv").string(), table.columns);
    emgram::emit_plot(table, (dir / "plot.svg").string());
    nlohmann::json meta = {
        {"command", "bench"},
        {"version", kVersion},
        {"kind", bench_kind},
        {"n", spec.n},
        {"m", spec.m},
        {"seed", spec.seed},
        {"samples", spec.samples},
        {"grid", grid_json(spec.grid)},
        {"threads", threads},
        {"deterministic", deterministic},
        {"out", bench_out},
        {"conventions", conventions_json()},
    };
    write_metadata(dir, meta);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const emgram::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const emgram::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
