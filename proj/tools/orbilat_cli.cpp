#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "orbilat/runner/commands.hpp"

namespace fs = std::filesystem;
using namespace orbilat;

namespace {

RunConfig load(const std::string& path) {
    auto parsed = load_config(path);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    return parsed.config;
}

// Subdirectories of a scan directory that hold an observables.csv.
std::vector<fs::path> runs_under(const fs::path& parent) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(parent))
        if (e.is_directory() && fs::exists(e.path() / "observables.csv")) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"orbilat: lattice Yang-Mills Monte Carlo with Wilson and orbifold actions"};
    app.require_subcommand(1);

    std::string config_path;
    bool resume = false;
    long stop_after = -1;
    auto* run = app.add_subcommand("run", "run one Markov chain");
    run->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    run->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
    run->add_option("--stop-after", stop_after)->group("");

    std::string axis;
    std::vector<double> values;
    auto* scan = app.add_subcommand("scan", "run one chain per value of a parameter");
    scan->add_option("--config", config_path, "base INI config")->required()->check(CLI::ExistingFile);
    scan->add_option("--axis", axis, "m2, a_t or a_iso")->required();
    scan->add_option("--values", values, "parameter values")->required()->delimiter(',');
    scan->add_flag("--resume", resume, "resume every child run");

    std::vector<std::string> dirs;
    std::string scan_dir, observable = "plaq_u_spatial", wilson_dir, out_path;
    double scale = 1.0;
    int bin_size = 0;
    auto* extr = app.add_subcommand("extrapolate", "quadratic fit in 1/m2 to m2 -> infinity");
    extr->add_option("dirs", dirs, "orbifold run directories");
    extr->add_option("--config", config_path, "base config of an m2 scan: fit every run below its output dir")
        ->check(CLI::ExistingFile);
    extr->add_option("--scan-dir", scan_dir, "use every run below this scan directory");
    extr->add_option("--observable", observable, "observables.csv column");
    extr->add_option("--scale", scale, "multiply the observable by this factor");
    extr->add_option("--wilson", wilson_dir, "wilson run to compare against");
    extr->add_option("--bin-size", bin_size, "jackknife bin size (default: each run's own)");
    extr->add_option("--out", out_path, "fit summary file (default: fit_<observable>.csv in the scan dir or cwd)");

    bool corrupt = false;
    int n_configs = 50;
    auto* equiv = app.add_subcommand("check-equivalence", "frozen orbifold action against the wilson action");
    equiv->add_option("--config", config_path, "INI config (lattice, group, couplings)")
        ->required()
        ->check(CLI::ExistingFile);
    equiv->add_option("--configs", n_configs, "random configurations to test");
    equiv->add_flag("--corrupt-coefficient", corrupt)->group("");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto s = cmd_run(load(config_path), {resume, stop_after});
            if (s.completed)
                std::printf("done: %ld trajectories, acceptance %.3f, dt %.6g x %d, %ld measurements (%ld dropped)\n",
                            s.trajectories, double(s.accepted) / std::max(1L, s.trajectories), s.dt, s.n_md,
                            s.measurements, s.dropped);
            return 0;
        }
        if (*scan) {
            const auto base = load(config_path);
            const auto ax = parse_axis(axis);
            const auto sums = cmd_scan(base, ax, values, {resume, -1});
            for (std::size_t i = 0; i < sums.size(); ++i)
                std::printf("%s = %g: acceptance %.3f, dt %.6g\n", axis_name(ax), values[i],
                            double(sums[i].accepted) / std::max(1L, sums[i].trajectories), sums[i].dt);
            return 0;
        }
        if (*extr) {
            std::vector<fs::path> paths(dirs.begin(), dirs.end());
            fs::path out_dir = ".";
            if (!config_path.empty()) {
                const auto base = load(config_path);
                if (scan_dir.empty()) scan_dir = base.out_dir;
                if (bin_size <= 0) bin_size = base.bin_size;
                out_dir = base.out_dir;
            }
            if (!scan_dir.empty())
                for (const auto& p : runs_under(scan_dir)) paths.push_back(p);
            std::optional<fs::path> w;
            if (!wilson_dir.empty()) w = wilson_dir;
            const auto rep = cmd_extrapolate(paths, observable, scale, w, bin_size);
            for (std::size_t i = 0; i < rep.points.size(); ++i)
                std::printf("1/m2 = %-10.6g %s = %.8g +- %.2g\n", rep.points[i].x, observable.c_str(),
                            rep.points[i].y, rep.points[i].sigma);
            std::printf("m2 -> inf: %.8g +- %.2g (chi2/dof %.3g)\n", rep.fit.a0, rep.fit.a0_err,
                        rep.fit.chi2_per_dof);
            if (rep.wilson)
                std::printf("wilson:    %.8g +- %.2g, pull %.3g\n", rep.wilson->mean, rep.wilson->err, *rep.pull);
            write_fit_summary(out_path.empty() ? out_dir / ("fit_" + observable + ".csv") : fs::path(out_path), rep);
            return 0;
        }
        if (*equiv) {
            const auto r = cmd_check_equivalence(load(config_path), n_configs, corrupt);
            std::printf("%s: %d configurations, max relative deviation %.3e\n", r.pass ? "PASS" : "FAIL", r.configs,
                        r.max_rel_dev);
            return r.pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
