// mlti: analysis front end for multilinear time-invariant systems.
//
// Subcommands:
//   analyze   stability / reachability / observability report for a system
//   compress  generalized CPD/TTD compression with parameter counts
//   bode      frequency response magnitude data (CSV)
//   bench     built-in experiment harnesses (7.1 - 7.4)

#include <CLI11.hpp>
#include <Eigen/SVD>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include "mlti/experiments.hpp"
#include "mlti/io.hpp"
#include "mlti/random.hpp"
#include "mlti/system.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitStrict = 2;
constexpr int kExitNumerical = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("MLTI_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw mlti::DomainError("MLTI_SEED is not an integer");
        }
    }
    return 20240901;
}

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string f17(double v) { return fmt::format("{:.17g}", v); }

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw mlti::IoError("cannot open " + path.string() + " for writing");
    out << text;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const std::string& manifest, const std::string& criteria_csv,
                const std::string& methods_csv, double tol, bool strict,
                const std::string& out_path) {
    const mlti::MltiSystem sys = mlti::io::load_system(manifest);
    const auto factored = mlti::io::load_factored_system(manifest);
    const std::string name = mlti::io::read_system_manifest(manifest).name;

    json report;
    report["system"] = name;
    report["state_shape"] = sys.state_shape().dims();
    report["parameters"] = {{"full", mlti::parameter_count(sys)}};
    if (factored)
        report["parameters"]["factored"] = mlti::parameter_count(*factored);

    bool any_bad = false;
    json criteria = json::array();
    for (const std::string& id : split_list(criteria_csv)) {
        const auto t0 = Clock::now();
        std::optional<mlti::StabilityVerdict> v;
        std::string skip_note;
        if (id == "eigen") {
            v = mlti::stability_eigen(sys);
        } else if (id == "hosvd") {
            v = mlti::stability_hosvd(sys);
        } else if (id == "ttd") {
            v = mlti::stability_ttd(sys.a);
        } else if (id == "factored") {
            if (factored)
                v = mlti::stability_factored(*factored);
            else
                skip_note = "system is not stored in factored form";
        } else if (id == "tucker") {
            if (factored) {
                try {
                    v = mlti::stability_tucker(*factored);
                } catch (const mlti::DomainError& e) {
                    skip_note = e.what();
                }
            } else {
                skip_note = "system is not stored in factored form";
            }
        } else if (id == "cpd") {
            // The weight criterion needs an order-2N CPD with orthonormal
            // factors; report the precondition through the library call.
            mlti::CpOptions opts;
            opts.seed = default_seed();
            const mlti::CpFactors cp =
                mlti::cp_als(sys.a.tensor(), sys.state_shape().count(), opts);
            v = mlti::stability_cpd(cp);
        } else {
            throw mlti::DomainError("unknown stability criterion '" + id + "'");
        }
        json entry;
        entry["criterion"] = id;
        if (v) {
            entry["verdict"] = mlti::to_string(v->verdict);
            entry["witness"] = v->witness;
            if (!v->note.empty()) entry["note"] = v->note;
            if (v->verdict == mlti::Stability::Unstable) any_bad = true;
        } else {
            entry["verdict"] = "skipped";
            entry["note"] = skip_note;
        }
        entry["wall_ms"] = ms_since(t0);
        criteria.push_back(std::move(entry));
    }
    report["stability"] = criteria;

    json reach = json::array();
    json obs = json::array();
    for (const std::string& id : split_list(methods_csv)) {
        const auto method = mlti::reach_method_from_string(id);
        if (!method) throw mlti::DomainError("unknown reachability method '" + id + "'");
        for (int dual = 0; dual < 2; ++dual) {
            const auto t0 = Clock::now();
            json entry;
            entry["method"] = id;
            try {
                const mlti::ReachabilityVerdict v = dual
                                                        ? mlti::is_observable(sys, *method)
                                                        : mlti::is_reachable(sys, *method);
                entry["verdict"] = mlti::to_string(v.verdict);
                if (v.rank >= 0) entry["rank"] = v.rank;
                if (!v.note.empty()) entry["note"] = v.note;
                if (v.verdict == mlti::TriState::No) any_bad = true;
            } catch (const mlti::PreconditionError& e) {
                entry["verdict"] = "skipped";
                entry["note"] = e.what();
            }
            entry["wall_ms"] = ms_since(t0);
            (dual ? obs : reach).push_back(std::move(entry));
        }
    }
    report["reachability"] = reach;
    report["observability"] = obs;
    report["tolerance"] = tol;

    const std::string text = report.dump(2) + "\n";
    if (!out_path.empty())
        write_text(out_path, text);
    else
        std::cout << text;

    fmt::print(stderr, "analyze: {} criteria, {} methods on '{}'\n",
               split_list(criteria_csv).size(), split_list(methods_csv).size(), name);
    return strict && any_bad ? kExitStrict : kExitOk;
}

// ---------------------------------------------------------------------------
// compress

int cmd_compress(const std::string& manifest, const std::string& format,
                 const std::string& ranks_csv, std::optional<double> eps,
                 const std::string& out_dir, std::uint64_t seed) {
    const mlti::MltiSystem sys = mlti::io::load_system(manifest);
    const std::string name = mlti::io::read_system_manifest(manifest).name;

    mlti::CompressOptions opts;
    opts.cp.seed = seed;
    if (format == "cpd") {
        opts.format = mlti::FactorFormat::Cpd;
        if (!ranks_csv.empty()) {
            const auto parts = split_list(ranks_csv);
            if (parts.size() != 3)
                throw mlti::DomainError("--ranks must be three comma-separated integers");
            opts.ranks = std::array<mlti::Index, 3>{std::stoll(parts[0]), std::stoll(parts[1]),
                                                    std::stoll(parts[2])};
        }
    } else if (format == "ttd") {
        opts.format = mlti::FactorFormat::Ttd;
        opts.eps = eps; // absent means exact ranks
    } else {
        throw mlti::DomainError("--format must be cpd or ttd");
    }

    const mlti::CompressResult res = mlti::compress(sys, opts);
    const fs::path dir = out_dir.empty() ? fs::path(manifest).parent_path() : fs::path(out_dir);
    const fs::path fact_manifest =
        mlti::io::save_factored_system(dir, name + "." + format, res.system);

    json report;
    report["system"] = name;
    report["format"] = format;
    report["parameters"] = {{"full", mlti::parameter_count(sys)},
                            {"reduced", res.parameter_count}};
    report["hinf_relative_error"] = res.hinf_error;
    if (format == "cpd") {
        report["kronecker_ranks"] = res.cpd_ranks;
    } else {
        report["tt_ranks"] = {res.tt_ranks[0], res.tt_ranks[1], res.tt_ranks[2]};
    }
    report["factored_manifest"] = fact_manifest.string();
    const fs::path report_path = dir / (name + "." + format + ".report.json");
    write_text(report_path, report.dump(2) + "\n");

    fmt::print("compress: {} -> {} parameters (full {}), H-inf relative error {}\n", name,
               res.parameter_count, mlti::parameter_count(sys), f17(res.hinf_error));
    fmt::print("factored manifest: {}\n", fact_manifest.string());
    fmt::print("report: {}\n", report_path.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bode

int cmd_bode(const std::string& manifest, mlti::Index points, const std::string& out_path,
             bool force) {
    const mlti::MltiSystem sys = mlti::io::load_system(manifest);
    if (!force) {
        const mlti::StabilityVerdict v = mlti::stability_eigen(sys);
        if (v.verdict == mlti::Stability::Unstable)
            throw mlti::PreconditionError(
                "bode: system is unstable (spectral radius " + std::to_string(v.witness) +
                "); pass --force to evaluate anyway");
    }
    if (points < 2) throw mlti::DomainError("bode: need at least 2 points");

    std::string csv = "omega,sigma_max\n";
    for (mlti::Index i = 0; i < points; ++i) {
        const double w =
            std::numbers::pi * static_cast<double>(i) / static_cast<double>(points - 1);
        const Eigen::MatrixXcd g = mlti::transfer_eval(sys, std::polar(1.0, w));
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
        const double sigma = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
        csv += f17(w) + "," + f17(sigma) + "\n";
    }
    if (!out_path.empty()) {
        write_text(out_path, csv);
        fmt::print("bode: wrote {} rows to {}\n", points, out_path);
    } else {
        std::cout << csv;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

void print_checks(const std::vector<mlti::experiments::Check>& checks, int& failures) {
    for (const auto& c : checks) {
        fmt::print("  [{}] {}{}\n", c.pass ? "PASS" : "FAIL", c.name,
                   c.detail.empty() ? "" : " (" + c.detail + ")");
        if (!c.pass) ++failures;
    }
}

int cmd_bench(const std::string& experiment, std::uint64_t seed,
              const std::string& sizes_csv, const std::string& out_dir) {
    const fs::path dir = out_dir.empty() ? fs::current_path() : fs::path(out_dir);
    fs::create_directories(dir);
    int failures = 0;

    if (experiment == "7.1") {
        const auto r = mlti::experiments::run_reach_obs_example();
        fmt::print("experiment 7.1: fixed 3x2 SISO system\n");
        fmt::print("  spectral radius product: {}\n", f17(r.rho_product));
        fmt::print("  rank_U(R) = {} (TT route {}), rank_U(O) = {} (TT route {})\n",
                   r.rank_reach, r.rank_reach_ttd, r.rank_obs, r.rank_obs_ttd);
        print_checks(r.checks, failures);
        mlti::io::save_dense_system(dir, "example71", r.system);
        fmt::print("  system files written to {}\n", (dir / "example71.json").string());
    } else if (experiment == "7.2") {
        std::vector<mlti::Index> sizes{6, 8, 10};
        if (!sizes_csv.empty()) {
            sizes.clear();
            for (const auto& p : split_list(sizes_csv)) sizes.push_back(std::stoll(p));
        }
        const auto r = mlti::experiments::run_sigma_timing(sizes, seed);
        std::string csv = "n,ttd_sigma,svd_sigma,rel_error,verdict,ttd_seconds,svd_seconds\n";
        fmt::print("experiment 7.2: sigma_max via TT pipeline vs dense SVD\n");
        for (const auto& row : r.rows) {
            fmt::print("  n = {:2d}: sigma {} vs {} (rel err {}), TTD {:.4f} s, SVD {:.4f} s\n",
                       row.n, f17(row.sigma_ttd), f17(row.sigma_svd), f17(row.rel_error),
                       row.ttd_seconds, row.svd_seconds);
            csv += fmt::format("{},{},{},{},{},{},{}\n", row.n, f17(row.sigma_ttd),
                               f17(row.sigma_svd), f17(row.rel_error), row.verdict,
                               row.ttd_seconds, row.svd_seconds);
        }
        print_checks(r.checks, failures);
        if (!r.trend_note.empty())
            fmt::print("  [{}] timing trend at n = 12: {}\n", r.trend_ok ? "OK" : "WARN",
                       r.trend_note);
        write_text(dir / "sigma_timing.csv", csv);
    } else if (experiment == "7.3") {
        const auto r = mlti::experiments::run_rank_truncation(seed);
        fmt::print("experiment 7.3: rank truncation ladders (full parameters {})\n",
                   r.full_parameters);
        std::string csv = "format,ranks,parameters,recon_error,hinf_error\n";
        for (const auto& row : r.rows) {
            fmt::print("  {:8s} ranks {:24s} params {:6d} recon {} hinf {}\n", row.format,
                       row.ranks_label, row.parameters, f17(row.recon_error),
                       f17(row.hinf_error));
            csv += fmt::format("{},\"{}\",{},{},{}\n", row.format, row.ranks_label,
                               row.parameters, f17(row.recon_error), f17(row.hinf_error));
        }
        print_checks(r.checks, failures);
        write_text(dir / "rank_truncation.csv", csv);
    } else if (experiment == "7.4") {
        const auto r = mlti::experiments::run_memory_comparison(seed);
        fmt::print("experiment 7.4: parameter budgets vs balanced truncation (full {})\n",
                   r.full_parameters);
        std::string csv = "method,ranks,parameters,hinf_error\n";
        for (const auto& row : r.rows) {
            fmt::print("  {:20s} {:20s} params {:6d} hinf {}\n", row.method, row.ranks_label,
                       row.parameters, f17(row.hinf_error));
            csv += fmt::format("{},\"{}\",{},{}\n", row.method, row.ranks_label, row.parameters,
                               f17(row.hinf_error));
        }
        print_checks(r.checks, failures);
        write_text(dir / "memory_comparison.csv", csv);
    } else {
        throw mlti::DomainError("--experiment must be one of 7.1, 7.2, 7.3, 7.4");
    }
    if (failures > 0) {
        fmt::print(stderr, "bench: {} check(s) failed\n", failures);
        return kExitStrict;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilinear time-invariant systems toolkit"};
    app.require_subcommand(1);

    std::string manifest, criteria = "eigen,hosvd,ttd", methods = "rank_u,ttd";
    double tol = mlti::linalg::kRankTol;
    bool strict = false;
    std::string out_path;

    auto* analyze = app.add_subcommand("analyze", "Stability and reachability report");
    analyze->add_option("manifest", manifest, "System manifest (JSON)")->required();
    analyze->add_option("--criteria", criteria, "Comma list: eigen,hosvd,cpd,ttd,factored,tucker");
    analyze->add_option("--methods", methods,
                        "Comma list: rank_u,gramian,ttd,cpd_cert,mlrank_neg,hosvd_neg");
    analyze->add_option("--tol", tol, "Relative rank tolerance");
    analyze->add_flag("--strict", strict, "Exit 2 on any unstable/no verdict");
    analyze->add_option("--out", out_path, "Report path (default: stdout)");

    std::string format = "ttd", ranks;
    std::optional<double> eps;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto* compress = app.add_subcommand("compress", "Generalized CPD/TTD compression");
    compress->add_option("manifest", manifest, "System manifest (JSON)")->required();
    compress->add_option("--format", format, "cpd or ttd")->required();
    compress->add_option("--ranks", ranks, "CPD Kronecker ranks R1,R2,R3");
    double eps_value = 0.0;
    auto* eps_opt = compress->add_option("--eps", eps_value, "TTD relative accuracy");
    compress->add_option("--out", out_dir, "Output directory");
    compress->add_option("--seed", seed, "ALS seed")->each([&](const std::string&) {
        seed_given = true;
    });

    mlti::Index points = 512;
    bool force = false;
    auto* bode = app.add_subcommand("bode", "Frequency response magnitude CSV");
    bode->add_option("manifest", manifest, "System manifest (JSON)")->required();
    bode->add_option("--points", points, "Grid size on [0, pi]");
    bode->add_option("--out", out_path, "CSV path (default: stdout)");
    bode->add_flag("--force", force, "Evaluate even if unstable");

    std::string experiment, sizes;
    auto* bench = app.add_subcommand("bench", "Built-in experiments");
    bench->add_option("--experiment", experiment, "7.1, 7.2, 7.3 or 7.4")->required();
    bench->add_option("--seed", seed, "Generator seed")->each([&](const std::string&) {
        seed_given = true;
    });
    bench->add_option("--sizes", sizes, "Comma list of sizes (experiment 7.2)");
    bench->add_option("--out", out_dir, "Output directory for CSV/report files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!seed_given) seed = default_seed();
        if (analyze->parsed())
            return cmd_analyze(manifest, criteria, methods, tol, strict, out_path);
        if (compress->parsed())
            return cmd_compress(manifest, format, ranks,
                                eps_opt->count() ? std::optional<double>(eps_value)
                                                 : std::nullopt,
                                out_dir, seed);
        if (bode->parsed()) return cmd_bode(manifest, points, out_path, force);
        if (bench->parsed()) return cmd_bench(experiment, seed, sizes, out_dir);
    } catch (const mlti::IoError& e) {
        fmt::print(stderr, "mlti: input error: {}\n", e.what());
        return kExitInput;
    } catch (const mlti::DomainError& e) {
        fmt::print(stderr, "mlti: input error: {}\n", e.what());
        return kExitInput;
    } catch (const mlti::Error& e) {
        fmt::print(stderr, "mlti: numerical failure: {}\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
