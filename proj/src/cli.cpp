#include "pilotwave/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pilotwave/analysis.hpp"
#include "pilotwave/experiment.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/trajectories.hpp"
#include "pilotwave/wavefield.hpp"

namespace pilotwave::cli {

namespace {

using Config = std::map<std::string, std::string>;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

/// Typed access to the resolved config; every getter names the key in its
/// error message.
class Resolved {
public:
    explicit Resolved(Config cfg) : cfg_(std::move(cfg)) {}

    const std::string& str(const std::string& key) const {
        auto it = cfg_.find(key);
        if (it == cfg_.end()) fail("config key '" + key + "' is missing");
        return it->second;
    }

    double num(const std::string& key) const {
        const std::string& v = str(key);
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument("");
            return d;
        } catch (...) {
            fail("config key '" + key + "': '" + v + "' is not a finite number");
        }
    }

    std::int64_t integer(const std::string& key) const {
        const std::string& v = str(key);
        try {
            std::size_t pos = 0;
            const long long i = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return i;
        } catch (...) {
            fail("config key '" + key + "': '" + v + "' is not an integer");
        }
    }

    std::uint64_t u64(const std::string& key) const {
        const std::string& v = str(key);
        try {
            std::size_t pos = 0;
            const unsigned long long i = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return i;
        } catch (...) {
            fail("config key '" + key + "': '" + v + "' is not an unsigned integer");
        }
    }

    std::vector<double> num_list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(std::stod(item));
            } catch (...) {
                fail("config key '" + key + "': '" + item + "' is not a number");
            }
        }
        return out;
    }

    const Config& map() const { return cfg_; }
    void set(const std::string& key, const std::string& value) { cfg_[key] = value; }

private:
    Config cfg_;
};

StateConfig state_config(const Resolved& r) {
    StateConfig c;
    c.slits_a = {r.num("sigma_a"), 0.5 * r.num("sep_a")};
    c.slits_b = {r.num("sigma_b"), 0.5 * r.num("sep_b")};
    c.phi = r.num("phi");
    const std::string kind = r.str("kind");
    if (kind == "entangled") c.kind = StateKind::Entangled;
    else if (kind == "product-upper") c.kind = StateKind::ProductUpper;
    else fail("config key 'kind': expected 'entangled' or 'product-upper', got '" + kind + "'");
    c.validate();
    return c;
}

IntegratorConfig integrator_config(const Resolved& r) {
    IntegratorConfig ic;
    ic.dt = r.num("dt");
    ic.t_end = r.num("t_end");
    const std::string m = r.str("method");
    if (m == "rk4") ic.method = IntegratorMethod::RK4;
    else if (m == "euler") ic.method = IntegratorMethod::Euler;
    else fail("config key 'method': expected 'rk4' or 'euler', got '" + m + "'");
    ic.eps_node = r.num("eps_node");
    ic.max_step_shrink = static_cast<int>(r.integer("max_step_shrink"));
    ic.record_stride = r.integer("record_stride");
    ic.validate();
    return ic;
}

BinningSpec binning_spec(const Resolved& r) {
    BinningSpec bs;
    bs.t_plane = r.num("t_plane");
    bs.lo_a = r.num("range_lo_a");
    bs.hi_a = r.num("range_hi_a");
    bs.lo_b = r.num("range_lo_b");
    bs.hi_b = r.num("range_hi_b");
    bs.n_bins_a = static_cast<int>(r.integer("n_bins_a"));
    bs.n_bins_b = static_cast<int>(r.integer("n_bins_b"));
    bs.validate();
    return bs;
}

PointerModel pointer_model(const Resolved& r) {
    PointerModel pm;
    pm.kappa = r.num("kappa");
    const std::string side = r.str("pointer_side");
    if (side == "a") pm.side = Side::A;
    else if (side == "b") pm.side = Side::B;
    else fail("config key 'pointer_side': expected 'a' or 'b', got '" + side + "'");
    pm.validate();
    return pm;
}

std::vector<std::pair<double, double>> parse_starts(const Resolved& r) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(r.str("starts"));
    std::string pair;
    while (std::getline(ss, pair, ';')) {
        pair = trim(pair);
        if (pair.empty()) continue;
        const auto comma = pair.find(',');
        if (comma == std::string::npos) {
            fail("config key 'starts': expected 'x_a,x_b' pairs separated by ';'");
        }
        try {
            out.emplace_back(std::stod(pair.substr(0, comma)),
                             std::stod(pair.substr(comma + 1)));
        } catch (...) {
            fail("config key 'starts': '" + pair + "' is not a coordinate pair");
        }
    }
    return out;
}

struct RunState {
    std::vector<std::string> outputs;
    std::int64_t node_stall = 0;
    std::int64_t saturation = 0;
    std::int64_t out_of_range = 0;
    nlohmann::json extra = nlohmann::json::object();
};

void write_file(const std::string& path, const std::string& content, RunState& st) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write output file '" + path + "'");
    out << content;
    st.outputs.push_back(path);
}

std::string trajectory_csv(const std::vector<IntegrationOutcome>& outcomes) {
    std::string csv = "traj_id,t,x_a,x_b,v_a,v_b\n";
    for (std::size_t id = 0; id < outcomes.size(); ++id) {
        for (const TrajectorySample& s : outcomes[id].trajectory.samples) {
            csv += std::to_string(id) + ',' + fmt17(s.t) + ',' + fmt17(s.x_a) + ',' +
                   fmt17(s.x_b) + ',' + fmt17(s.v_a) + ',' + fmt17(s.v_b) + '\n';
        }
    }
    return csv;
}

// --- scenarios ---------------------------------------------------------------

void run_budget(const Resolved& r, const std::string& prefix, RunState& st) {
    BudgetSpec b;
    b.n_planes = r.integer("n_planes");
    b.n_bins = r.integer("n_bins");
    b.pairs_per_bin = r.integer("pairs_per_bin");
    b.pair_rate = r.num("pair_rate");
    const double seconds = budget_seconds(b);
    std::string csv = "planes,bins,pairs_per_bin,pair_rate,seconds\n";
    csv += std::to_string(b.n_planes) + ',' + std::to_string(b.n_bins) + ',' +
           std::to_string(b.pairs_per_bin) + ',' + fmt17(b.pair_rate) + ',' +
           fmt17(seconds) + '\n';
    write_file(prefix + ".budget.csv", csv, st);
    st.extra["budget_seconds"] = seconds;
    st.extra["budget_hours"] = seconds / 3600.0;
}

void run_trajectories(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig c = state_config(r);
    const IntegratorConfig ic = integrator_config(r);
    std::vector<std::pair<double, double>> starts = parse_starts(r);
    const bool explicit_starts = !starts.empty();
    if (!explicit_starts) {
        EnsembleSpec spec{r.integer("n"), r.u64("seed")};
        starts = sample_initial(c, spec);
    }

    auto integrate_all = [&](const StateConfig& cfg) {
        std::vector<IntegrationOutcome> out(starts.size());
        for (std::size_t i = 0; i < starts.size(); ++i) {
            out[i] = integrate_pair_outcome(starts[i], cfg, ic);
            if (out[i].stalled) {
                ++st.node_stall;
                if (explicit_starts) {
                    throw NodeStallError("trajectory " + std::to_string(i) +
                                             " stalled at t=" +
                                             std::to_string(out[i].last_valid_time),
                                         out[i].last_valid_time);
                }
            }
        }
        return out;
    };

    const auto bundle_a = integrate_all(c);
    write_file(prefix + ".trajectories.csv", trajectory_csv(bundle_a), st);

    const std::string phi_b = trim(r.str("phi_b"));
    if (!phi_b.empty()) {
        StateConfig cb = c;
        try {
            cb.phi = std::stod(phi_b);
        } catch (...) {
            fail("config key 'phi_b': '" + phi_b + "' is not a number");
        }
        cb.validate();
        const auto bundle_b = integrate_all(cb);
        write_file(prefix + ".trajectories_b.csv", trajectory_csv(bundle_b), st);
        std::string div = "traj_id,x_a0,x_b0,divergence\n";
        for (std::size_t i = 0; i < starts.size(); ++i) {
            double d = std::numeric_limits<double>::quiet_NaN();
            if (!bundle_a[i].stalled && !bundle_b[i].stalled) {
                d = std::abs(bundle_a[i].trajectory.samples.back().x_b -
                             bundle_b[i].trajectory.samples.back().x_b);
            }
            div += std::to_string(i) + ',' + fmt17(starts[i].first) + ',' +
                   fmt17(starts[i].second) + ',' + fmt17(d) + '\n';
        }
        write_file(prefix + ".divergence.csv", div, st);
    }
}

void run_joint_density(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig c = state_config(r);
    const double t = r.num("t");
    if (!(std::isfinite(t) && t >= 0.0)) fail("config key 't': must be >= 0");
    const Grid2D grid{{r.num("grid_lo_a"), r.num("grid_hi_a"),
                       static_cast<int>(r.integer("grid_n_a"))},
                      {r.num("grid_lo_b"), r.num("grid_hi_b"),
                       static_cast<int>(r.integer("grid_n_b"))}};
    grid.validate();
    std::string csv = "x_a,x_b,density\n";
    for (int i = 0; i < grid.a.n; ++i) {
        const double xa = grid.a.point(i);
        for (int j = 0; j < grid.b.n; ++j) {
            const double xb = grid.b.point(j);
            csv += fmt17(xa) + ',' + fmt17(xb) + ',' +
                   fmt17(joint_density({xa, xb, t}, c)) + '\n';
        }
    }
    write_file(prefix + ".joint-density.csv", csv, st);
}

void run_marginals(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig c = state_config(r);
    const double t = r.num("t");
    if (!(std::isfinite(t) && t >= 0.0)) fail("config key 't': must be >= 0");
    std::string csv = "side,x,density\n";
    const Grid1D ga{r.num("grid_lo_a"), r.num("grid_hi_a"),
                    static_cast<int>(r.integer("grid_n_a"))};
    const Grid1D gb{r.num("grid_lo_b"), r.num("grid_hi_b"),
                    static_cast<int>(r.integer("grid_n_b"))};
    ga.validate("grid_a");
    gb.validate("grid_b");
    for (int i = 0; i < ga.n; ++i) {
        const double x = ga.point(i);
        csv += "a," + fmt17(x) + ',' + fmt17(marginal_density(Side::A, x, t, c)) + '\n';
    }
    for (int i = 0; i < gb.n; ++i) {
        const double x = gb.point(i);
        csv += "b," + fmt17(x) + ',' + fmt17(marginal_density(Side::B, x, t, c)) + '\n';
    }
    write_file(prefix + ".marginals.csv", csv, st);
}

void run_velocity_profile(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig base = state_config(r);
    const PointerModel pm = pointer_model(r);
    const BinningSpec bs = binning_spec(r);
    const int fixed = static_cast<int>(r.integer("fixed_bin_a"));
    ProfileOptions opt;
    opt.max_events = r.integer("max_events");
    opt.threads = static_cast<int>(r.integer("threads"));
    opt.eps_node = r.num("eps_node");

    std::vector<double> phis = r.num_list("phi_values");
    if (phis.empty()) phis.push_back(base.phi);

    nlohmann::json profiles = nlohmann::json::array();
    for (std::size_t k = 0; k < phis.size(); ++k) {
        StateConfig c = base;
        c.phi = phis[k];
        c.validate();
        const ProfileResult res = estimate_profile(c, pm, bs, fixed,
                                                   r.integer("pairs_per_bin"),
                                                   r.u64("seed"), opt);
        std::string csv = "x_b_center,v_hat,stderr,n_used,v_analytic\n";
        nlohmann::json underfilled = nlohmann::json::array();
        nlohmann::json bin_avg = nlohmann::json::array();
        for (const ProfileBin& b : res.bins) {
            csv += fmt17(b.x_b_center) + ',' + fmt17(b.v_hat) + ',' + fmt17(b.stderr_v) +
                   ',' + std::to_string(b.n_used) + ',' + fmt17(b.v_analytic) + '\n';
            if (b.underfilled) underfilled.push_back(b.x_b_center);
            bin_avg.push_back(b.v_analytic_bin_avg);
        }
        write_file(prefix + ".velocity-profile." + std::to_string(k) + ".csv", csv, st);
        st.saturation += res.saturated;
        st.out_of_range += res.out_of_range;
        profiles.push_back({{"phi", phis[k]},
                            {"total_events", res.total_events},
                            {"conditioned_events", res.conditioned_events},
                            {"cap_hit", res.cap_hit},
                            {"underfilled_bin_centers", underfilled},
                            {"v_analytic_bin_avg", bin_avg}});
    }
    st.extra["profiles"] = profiles;
}

void run_weak_sim(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig c = state_config(r);
    const PointerModel pm = pointer_model(r);
    const BinningSpec bs = binning_spec(r);
    const double min_cov = r.num("min_coverage");
    const auto cov = bs.coverage(c);
    if (cov.first < min_cov) {
        fail("config key 'range_lo_a/range_hi_a': range covers " + fmt17(cov.first) +
             " < min_coverage of the A marginal at t_plane");
    }
    if (cov.second < min_cov) {
        fail("config key 'range_lo_b/range_hi_b': range covers " + fmt17(cov.second) +
             " < min_coverage of the B marginal at t_plane");
    }
    const EventSimulator sim(c, pm, bs, r.num("eps_node"));
    const std::int64_t n = r.integer("n");
    if (n < 1) fail("config key 'n': must be >= 1");
    const std::uint64_t seed = r.u64("seed");

    std::string csv = "event_id,x_a,x_b,bin_a,bin_b,outcome\n";
    for (std::int64_t i = 0; i < n; ++i) {
        Substream ss(seed, static_cast<std::uint64_t>(i));
        try {
            const DetectionEvent ev = sim.simulate_event(ss);
            if (ev.out_of_range) ++st.out_of_range;
            csv += std::to_string(i) + ',' + fmt17(ev.x_a) + ',' + fmt17(ev.x_b) + ',' +
                   std::to_string(ev.bin_a) + ',' + std::to_string(ev.bin_b) + ',' +
                   std::to_string(ev.outcome) + '\n';
        } catch (const SaturationError&) {
            ++st.saturation;
        } catch (const NodeRegionError&) {
            ++st.node_stall;
        }
    }
    write_file(prefix + ".weak-sim.csv", csv, st);
}

void run_equivariance(const Resolved& r, const std::string& prefix, RunState& st) {
    const StateConfig c = state_config(r);
    IntegratorConfig ic = integrator_config(r);
    ic.record_stride = 0; // endpoints are all this scenario needs
    EnsembleSpec spec{r.integer("n"), r.u64("seed")};
    const double lo = r.num("hist_lo");
    const double hi = r.num("hist_hi");
    const int bins = static_cast<int>(r.integer("hist_bins"));
    if (!(lo < hi)) fail("config key 'hist_lo/hist_hi': requires lo < hi");
    if (bins < 1) fail("config key 'hist_bins': must be >= 1");

    const auto outcomes =
        integrate_ensemble(c, spec, ic, static_cast<int>(r.integer("threads")));
    Histogram2D empirical(lo, hi, bins, lo, hi, bins);
    std::int64_t stalled = 0;
    for (const IntegrationOutcome& o : outcomes) {
        if (o.stalled) {
            ++stalled;
            continue;
        }
        const TrajectorySample& s = o.trajectory.samples.back();
        empirical.add(s.x_a, s.x_b);
    }
    st.node_stall += stalled;
    Histogram2D expected = binned_density(
        [&](double xa, double xb) { return joint_density({xa, xb, ic.t_end}, c); }, lo,
        hi, bins, lo, hi, bins);
    expected.out_of_range = std::max(0.0, 1.0 - expected.total());
    const DistanceReport tv =
        distribution_distance(empirical, expected, DistanceMetric::TotalVariation);

    std::string csv = "n,t_end,bins_a,bins_b,tv_distance,stalled\n";
    csv += std::to_string(spec.n) + ',' + fmt17(ic.t_end) + ',' + std::to_string(bins) +
           ',' + std::to_string(bins) + ',' + fmt17(tv.value) + ',' +
           std::to_string(stalled) + '\n';
    write_file(prefix + ".equivariance.csv", csv, st);
    st.extra["tv_distance"] = tv.value;
}

} // namespace

const Config& default_config() {
    static const Config defaults = {
        {"scenario", ""},
        // state
        {"sigma_a", "0.1"},
        {"sep_a", "1.0"},
        {"sigma_b", "0.1"},
        {"sep_b", "1.0"},
        {"phi", "0"},
        {"kind", "entangled"},
        // integrator
        {"dt", "0.002"},
        {"t_end", "4.0"},
        {"method", "rk4"},
        {"eps_node", "1e-12"},
        {"max_step_shrink", "12"},
        {"record_stride", "1"},
        // ensembles / events
        {"n", "1000"},
        {"seed", std::to_string(kDefaultSeed)},
        {"threads", "1"},
        {"starts", ""},
        {"phi_b", ""},
        // density / marginal grids
        {"t", "4.0"},
        {"grid_lo_a", "-60"},
        {"grid_hi_a", "60"},
        {"grid_n_a", "121"},
        {"grid_lo_b", "-60"},
        {"grid_hi_b", "60"},
        {"grid_n_b", "121"},
        // experiment
        {"kappa", "0.1"},
        {"pointer_side", "b"},
        {"t_plane", "4.0"},
        {"range_lo_a", "-20.5"},
        {"range_hi_a", "20.5"},
        {"n_bins_a", "41"},
        {"range_lo_b", "-20"},
        {"range_hi_b", "20"},
        {"n_bins_b", "40"},
        {"fixed_bin_a", "24"},
        {"pairs_per_bin", "1000"},
        {"max_events", "40000000"},
        {"phi_values", ""},
        {"min_coverage", "0.999"},
        // budget
        {"n_planes", "25"},
        {"n_bins", "40"},
        {"pair_rate", "1e6"},
        // equivariance histogram
        {"hist_lo", "-200"},
        {"hist_hi", "200"},
        {"hist_bins", "40"},
    };
    return defaults;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot read config file '" + path + "'");
    Config out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (default_config().find(key) == default_config().end()) {
            fail(path + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
        }
        out[key] = value;
    }
    return out;
}

int run(const CliOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    RunState st;
    Config cfg = default_config();
    int code = kExitOk;
    std::string error;
    std::string scenario;

    try {
        if (!options.config_path.empty()) {
            for (const auto& [k, v] : parse_config_file(options.config_path)) cfg[k] = v;
        }
        for (const std::string& ov : options.overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos) fail("--set expects key=value, got '" + ov + "'");
            const std::string key = trim(ov.substr(0, eq));
            if (cfg.find(key) == cfg.end()) fail("--set: unknown config key '" + key + "'");
            cfg[key] = trim(ov.substr(eq + 1));
        }
        if (options.seed) cfg["seed"] = std::to_string(*options.seed);
        if (!options.scenario.empty()) cfg["scenario"] = options.scenario;

        Resolved r(cfg);
        scenario = r.str("scenario");
        cfg = r.map();

        if (scenario == "budget") run_budget(r, options.out_prefix, st);
        else if (scenario == "trajectories") run_trajectories(r, options.out_prefix, st);
        else if (scenario == "joint-density") run_joint_density(r, options.out_prefix, st);
        else if (scenario == "marginals") run_marginals(r, options.out_prefix, st);
        else if (scenario == "velocity-profile") run_velocity_profile(r, options.out_prefix, st);
        else if (scenario == "weak-sim") run_weak_sim(r, options.out_prefix, st);
        else if (scenario == "equivariance") run_equivariance(r, options.out_prefix, st);
        else {
            fail("config key 'scenario': expected one of budget, trajectories, "
                 "joint-density, marginals, velocity-profile, weak-sim, equivariance; "
                 "got '" + scenario + "'");
        }
    } catch (const std::invalid_argument& e) {
        code = kExitConfig;
        error = e.what();
    } catch (const std::exception& e) {
        code = kExitNumerical;
        error = e.what();
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Resolved config in the same flat format, re-runnable as-is.
    try {
        std::string resolved;
        for (const auto& [k, v] : cfg) resolved += k + " = " + v + "\n";
        const std::filesystem::path p(options.out_prefix + ".resolved.cfg");
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        out << resolved;
    } catch (...) {
        // metadata below still records the failure
    }

    nlohmann::json meta;
    meta["tool"] = kToolName;
    meta["version"] = kToolVersion;
    meta["scenario"] = scenario;
    meta["seed"] = cfg.count("seed") ? cfg["seed"] : std::to_string(kDefaultSeed);
    meta["wall_clock_seconds"] = wall;
    meta["exit_code"] = code;
    if (!error.empty()) meta["error"] = error;
    meta["incidents"] = {{"node_stall", st.node_stall},
                         {"saturation", st.saturation},
                         {"out_of_range", st.out_of_range}};
    meta["config"] = cfg;
    meta["outputs"] = st.outputs;
    if (!st.extra.empty()) meta["results"] = st.extra;

    try {
        std::ofstream out(options.out_prefix + ".metadata.json", std::ios::binary);
        out << meta.dump(2) << '\n';
    } catch (...) {
    }

    if (!error.empty()) std::cerr << kToolName << ": " << error << '\n';
    return code;
}

} // namespace pilotwave::cli
