#pragma once

// The four subcommands as library calls. Errors propagate as exceptions;
// exit_code_for() maps them to the CLI exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../analysis.hpp"
#include "../hmc.hpp"
#include "../observables.hpp"
#include "../orbifold.hpp"
#include "../wilson.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "output.hpp"

namespace orbilat {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    bool resume = false;
    long stop_after = -1;  // test hook: return after this many trajectories, as if killed
};

struct RunSummary {
    long trajectories = 0;
    long accepted = 0;
    long measurements = 0;
    long dropped = 0;
    double dt = 0.0;
    int n_md = 0;
    bool completed = false;
};

// Initial step for dt = auto. The tuner corrects it during thermalization.
inline double initial_step(const RunConfig& c) {
    const auto& p = c.phys;
    const double w = std::max(p.temporal_weight(), p.spatial_weight());
    double dt = 0.1 / std::sqrt(p.n_colors * w);
    if (c.action == Action::orbifold) dt = std::min(dt, 0.3 / std::sqrt(std::max({p.m2, p.m2_u1, 1.0})));
    return std::min(dt, c.tau);
}

namespace detail {

template <int N>
WilsonConfig<N> initial_state(const RunConfig& c, const WilsonTheory<N>&, std::mt19937_64& rng) {
    return c.hot_start ? random_wilson_config<N>(c.shape(), rng) : WilsonConfig<N>(c.shape());
}

template <int N>
OrbifoldConfig<N> initial_state(const RunConfig& c, const OrbifoldTheory<N>&, std::mt19937_64& rng) {
    if (!c.hot_start) return identity_orbifold_config<N>(c.shape(), c.phys);
    return frozen_reduce(random_wilson_config<N>(c.shape(), rng), c.phys);
}

// Acceptance window for the step-size tuner and the band it aims for.
inline constexpr int tune_window = 20;

inline int retune(int n_md, double acceptance) {
    if (acceptance < 0.75) return int(std::ceil(n_md * 1.3));
    if (acceptance < 0.85) return int(std::ceil(n_md * 1.1));
    if (acceptance > 0.95) return std::max(1, int(std::floor(n_md / 1.1)));
    return n_md;
}

template <int N, class Theory>
RunSummary run_chain(const RunConfig& c, const Theory& theory, const RunOptions& opt, std::ostream& log) {
    const fs::path dir = c.out_dir;
    fs::create_directories(dir);
    const fs::path ckpt = dir / "checkpoint.bin";
    const fs::path csv = dir / "observables.csv";
    const fs::path poly_csv = dir / "polyakov.csv";
    const std::string cfg_text = serialize_config(c);
    const std::uint64_t hash = fnv1a64(cfg_text);

    std::mt19937_64 rng(c.seed);
    auto state = initial_state<N>(c, theory, rng);

    RunSummary sum;
    long next = 0;
    int window_acc = 0;
    int n_md = c.n_md ? *c.n_md : std::max(1, int(std::lround(c.tau / (c.dt ? *c.dt : initial_step(c)))));
    double dt = c.dt ? *c.dt : c.tau / n_md;

    if (opt.resume) {
        if (!fs::exists(ckpt)) throw CheckpointFormatError("resume requested but " + ckpt.string() + " does not exist");
        const auto h = read_checkpoint_header(ckpt);
        if (h.config_hash != hash)
            throw CheckpointMismatchError("checkpoint was written by config " + hex64(h.config_hash) +
                                              ", current config is " + hex64(hash),
                                          hash, h.config_hash);
        read_checkpoint(ckpt, state);
        restore_rng(rng, h.rng_state);
        next = h.next_traj;
        dt = h.dt;
        n_md = h.n_md;
        sum.accepted = h.accepted;
        sum.dropped = h.dropped;
        window_acc = int(h.tune_window_accepted);
        truncate_csv(csv, next);
        truncate_csv(poly_csv, next);
        log << "resuming at trajectory " << next << "\n";
    } else {
        fs::remove(csv);
        fs::remove(poly_csv);
        fs::remove(ckpt);
        std::ofstream(dir / "config.ini") << cfg_text;
    }

    const bool tuning = !c.dt && !c.n_md;
    const long tune_end = tuning ? c.n_therm / 2 : 0;
    const long total = c.n_therm + c.n_traj;

    std::ofstream out, poly;
    auto open_streams = [&] {
        if (out.is_open()) return;
        const bool fresh = !fs::exists(csv);
        out.open(csv, std::ios::app);
        if (fresh) {
            out << "# orbilat observables\n" << config_comment_block(c);
            out << "# tau = " << fmt_double(dt * n_md) << ", dt = " << fmt_double(dt) << ", n_md = " << n_md
                << "\n";
            const auto& cols = observable_columns();
            for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
            out << "\n";
        }
        if (c.polyakov_scatter) {
            const bool pfresh = !fs::exists(poly_csv);
            poly.open(poly_csv, std::ios::app);
            if (pfresh) poly << "# orbilat polyakov scatter\n" << config_comment_block(c) << "traj,re_p,im_p\n";
        }
    };

    auto save = [&](long next_traj) {
        out.flush();
        poly.flush();
        CheckpointHeader h;
        h.config_hash = hash;
        h.config_text = cfg_text;
        h.rng_state = rng_state(rng);
        h.next_traj = next_traj;
        h.dt = dt;
        h.n_md = n_md;
        h.accepted = sum.accepted;
        h.dropped = sum.dropped;
        h.tune_window_accepted = window_acc;
        h.action = c.action;
        h.n_colors = N;
        write_checkpoint(ckpt, h, state);
    };

    HmcParams hp;
    hp.seed = c.seed;
    for (long t = next; t < total; ++t) {
        if (opt.stop_after >= 0 && t >= opt.stop_after) return sum;
        hp.dt = dt;
        hp.n_md = n_md;
        const auto rec = hmc_trajectory(theory, state, hp, rng, t);
        sum.accepted += rec.accepted;
        if (t < tune_end) {
            window_acc += rec.accepted;
            if ((t + 1) % tune_window == 0) {
                n_md = retune(n_md, double(window_acc) / tune_window);
                dt = c.tau / n_md;
                window_acc = 0;
            }
            if (t + 1 == tune_end) log << "step size fixed at dt = " << dt << ", n_md = " << n_md << "\n";
        }
        if (t >= c.n_therm && (t - c.n_therm) % c.meas_every == 0) {
            open_streams();
            try {
                const auto snap = measure(state, theory.params());
                out << csv_row(t, rec.dh, rec.accepted, snap);
                if (c.polyakov_scatter) poly << polyakov_row(t, snap);
            } catch (const DecompositionError& e) {
                ++sum.dropped;
                log << "trajectory " << t << ": measurement dropped (" << e.what() << ")\n";
            }
        }
        if ((t + 1) % c.checkpoint_every == 0 || t + 1 == total) save(t + 1);
    }
    if (total == c.n_therm) open_streams();
    out.close();
    poly.close();

    sum.trajectories = total;
    sum.dt = dt;
    sum.n_md = n_md;
    sum.completed = true;
    std::ifstream count(csv);
    std::string line;
    while (std::getline(count, line))
        if (!line.empty() && line[0] != '#' && line[0] != 't') ++sum.measurements;

    std::ofstream s(dir / "summary.txt");
    s << config_comment_block(c);
    s << "trajectories = " << sum.trajectories << "\n";
    s << "acceptance = " << double(sum.accepted) / std::max<long>(1, sum.trajectories) << "\n";
    s << "dt = " << fmt_double(dt) << "\n";
    s << "n_md = " << n_md << "\n";
    s << "tau = " << fmt_double(dt * n_md) << "\n";
    s << "measurements = " << sum.measurements << "\n";
    s << "dropped_measurements = " << sum.dropped << "\n";
    return sum;
}

} // namespace detail

template <int N>
RunSummary run_with(const RunConfig& c, const RunOptions& opt, std::ostream& log) {
    if (c.action == Action::wilson) return detail::run_chain<N>(c, WilsonTheory<N>(c.phys), opt, log);
    OrbifoldTerms terms;
    terms.enabled[1] = c.include_t2;
    return detail::run_chain<N>(c, OrbifoldTheory<N>(c.phys, terms), opt, log);
}

inline RunSummary cmd_run(const RunConfig& c, const RunOptions& opt = {}, std::ostream& log = std::cerr) {
    return c.phys.n_colors == 2 ? run_with<2>(c, opt, log) : run_with<3>(c, opt, log);
}

// ---------------------------------------------------------------------------
// scan

enum class ScanAxis { m2, a_t, a_iso };

inline ScanAxis parse_axis(const std::string& s) {
    if (s == "m2") return ScanAxis::m2;
    if (s == "a_t") return ScanAxis::a_t;
    if (s == "a_iso") return ScanAxis::a_iso;
    throw ConfigError("unknown scan axis '" + s + "' (expected m2, a_t or a_iso)");
}

inline const char* axis_name(ScanAxis a) { return a == ScanAxis::m2 ? "m2" : a == ScanAxis::a_t ? "a_t" : "a_iso"; }

// Child configs: one per value, seeds hash64(base seed, index), output in
// <base dir>/<axis>_<value>.
inline std::vector<RunConfig> scan_configs(const RunConfig& base, ScanAxis axis, const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("scan: no values given");
    std::set<double> seen;
    for (double v : values) {
        if (!(v > 0)) throw ConfigError("scan: values must be positive");
        if (!seen.insert(v).second) throw ConfigError("scan: duplicate value " + detail::fmt_double(v));
    }
    if (axis == ScanAxis::m2 && base.action != Action::orbifold)
        throw ConfigError("scan: the m2 axis needs an orbifold base config");
    std::vector<RunConfig> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        RunConfig c = base;
        const double v = values[i];
        switch (axis) {
        case ScanAxis::m2:
            c.phys.m2 = v;
            c.phys.m2_u1 = v;
            break;
        case ScanAxis::a_t:
            c.phys.a_t = v;
            break;
        case ScanAxis::a_iso:
            c.phys.a = v;
            c.phys.a_t = v;
            break;
        }
        c.seed = hash64(base.seed, i);
        char name[64];
        std::snprintf(name, sizeof name, "%s_%g", axis_name(axis), v);
        c.out_dir = (fs::path(base.out_dir) / name).string();
        out.push_back(c);
    }
    return out;
}

inline std::vector<RunSummary> cmd_scan(const RunConfig& base, ScanAxis axis, const std::vector<double>& values,
                                        const RunOptions& opt = {}, std::ostream& log = std::cerr) {
    std::vector<RunSummary> r;
    for (const auto& c : scan_configs(base, axis, values)) {
        log << "scan: " << c.out_dir << "\n";
        r.push_back(cmd_run(c, opt, log));
    }
    return r;
}

// ---------------------------------------------------------------------------
// extrapolate

struct ExtrapolationReport {
    std::string observable;
    double scale = 1.0;
    std::vector<FitPoint> points;
    std::vector<std::string> dirs;
    std::vector<std::string> hashes;
    FitResult fit;
    std::optional<EnsembleEstimate> wilson;
    std::optional<double> pull;  // (a0 - y_wilson) / sqrt(a0_err^2 + sigma_wilson^2)
};

inline EnsembleEstimate run_estimate(const RunData& r, const std::string& observable, double scale, int bin_size) {
    std::vector<double> v = r.column(observable);
    for (auto& x : v) x *= scale;
    return jackknife(v, bin_size);
}

// bin_size <= 0: each run's own output.bin_size.
inline ExtrapolationReport cmd_extrapolate(const std::vector<fs::path>& run_dirs, const std::string& observable,
                                           double scale = 1.0, std::optional<fs::path> wilson_dir = std::nullopt,
                                           int bin_size = 0) {
    if (run_dirs.size() < 4)
        throw InsufficientStatisticsError("extrapolate: need at least 4 orbifold runs, got " +
                                          std::to_string(run_dirs.size()));
    ExtrapolationReport rep;
    rep.observable = observable;
    rep.scale = scale;
    std::set<double> masses;
    for (const auto& d : run_dirs) {
        const auto r = read_run(d);
        if (r.config.action != Action::orbifold)
            throw ConfigError("extrapolate: " + d.string() + " is a wilson run; orbifold runs expected");
        if (!(r.config.phys.m2 > 0)) throw ConfigError("extrapolate: " + d.string() + " has m2 = 0");
        if (!masses.insert(r.config.phys.m2).second)
            throw ConfigError("extrapolate: two runs at m2 = " + detail::fmt_double(r.config.phys.m2));
        const auto e = run_estimate(r, observable, scale, bin_size > 0 ? bin_size : r.config.bin_size);
        rep.points.push_back({1.0 / r.config.phys.m2, e.mean, e.err});
        rep.dirs.push_back(d.string());
        rep.hashes.push_back(r.config_hash);
    }
    rep.fit = quad_extrapolate(rep.points);
    if (wilson_dir) {
        const auto w = read_run(*wilson_dir);
        if (w.config.action != Action::wilson)
            throw ConfigError("extrapolate: " + wilson_dir->string() + " is not a wilson run");
        rep.wilson = run_estimate(w, observable, scale, bin_size > 0 ? bin_size : w.config.bin_size);
        rep.pull = (rep.fit.a0 - rep.wilson->mean) /
                   std::sqrt(rep.fit.a0_err * rep.fit.a0_err + rep.wilson->err * rep.wilson->err);
    }
    return rep;
}

inline void write_fit_summary(const fs::path& path, const ExtrapolationReport& rep) {
    std::ofstream o(path);
    if (!o) throw ConfigError("cannot write " + path.string());
    o << "# orbilat extrapolation\n";
    for (std::size_t i = 0; i < rep.dirs.size(); ++i)
        o << "# input = " << rep.dirs[i] << ", config_hash = " << rep.hashes[i] << "\n";
    o << "# scale = " << detail::fmt_double(rep.scale) << "\n";
    o << "observable,a0,a0_err,chi2_per_dof,points_used";
    if (rep.wilson) o << ",wilson,wilson_err,pull";
    o << "\n";
    o << rep.observable << "," << detail::fmt_double(rep.fit.a0) << "," << detail::fmt_double(rep.fit.a0_err) << ","
      << detail::fmt_double(rep.fit.chi2_per_dof) << "," << rep.fit.n_points;
    if (rep.wilson)
        o << "," << detail::fmt_double(rep.wilson->mean) << "," << detail::fmt_double(rep.wilson->err) << ","
          << detail::fmt_double(*rep.pull);
    o << "\n";
}

// ---------------------------------------------------------------------------
// check-equivalence

struct EquivalenceReport {
    int configs = 0;
    double max_rel_dev = 0.0;
    bool pass = false;
};

// S_orb(frozen(w)) - S_orb(frozen(1)) against S_wilson(w) - S_wilson(1).
// corrupt: test hook that perturbs one orbifold coefficient.
template <int N>
EquivalenceReport check_equivalence_with(const RunConfig& c, int n_configs, bool corrupt) {
    const auto shape = c.shape();
    PhysParams p = c.phys;
    PhysParams po = p;
    if (corrupt) po.a_t *= 1.0 + 1e-6;
    OrbifoldTerms terms;
    terms.enabled[1] = c.include_t2;
    std::mt19937_64 rng(c.seed);
    const WilsonConfig<N> one(shape);
    const double sw0 = wilson_action(one, p);
    const double so0 = orbifold_action(frozen_reduce(one, p), po, terms);
    EquivalenceReport r;
    for (int i = 0; i < n_configs; ++i) {
        const auto w = random_wilson_config<N>(shape, rng);
        const double dw = wilson_action(w, p) - sw0;
        const double dorb = orbifold_action(frozen_reduce(w, p), po, terms) - so0;
        r.max_rel_dev = std::max(r.max_rel_dev, std::abs(dorb - dw) / std::max(std::abs(dw), 1e-300));
        ++r.configs;
    }
    r.pass = r.max_rel_dev <= 1e-10;
    return r;
}

inline EquivalenceReport cmd_check_equivalence(const RunConfig& c, int n_configs = 50, bool corrupt = false) {
    return c.phys.n_colors == 2 ? check_equivalence_with<2>(c, n_configs, corrupt)
                                : check_equivalence_with<3>(c, n_configs, corrupt);
}

// ---------------------------------------------------------------------------

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const CheckpointMismatchError*>(&e) || dynamic_cast<const CheckpointFormatError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 2;
    return 1;
}

} // namespace orbilat
