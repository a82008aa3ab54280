#include "bfdr/cli.hpp"

#include "bfdr/asymptotics.hpp"
#include "bfdr/dataio.hpp"
#include "bfdr/lfdr.hpp"
#include "bfdr/mc_engine.hpp"
#include "bfdr/pi0.hpp"
#include "bfdr/procedures.hpp"
#include "bfdr/simgen.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace bfdr::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
        if (parts.size() != 3) throw std::invalid_argument("grid must be lo:hi:step, got '" + text + "'");
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid needs step > 0 and hi >= lo: '" + text + "'");
        for (std::size_t i = 0;; ++i) {
            double v = lo + static_cast<double>(i) * step;
            if (v > hi + 1e-9) break;
            v = std::round(v * 1e12) / 1e12;
            out.push_back(v);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("empty grid '" + text + "'");
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text)
{
    std::vector<std::size_t> out;
    for (double v : parse_grid(text)) {
        if (v < 1.0 || v != std::floor(v)) throw std::invalid_argument("expected positive integers in '" + text + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

namespace {

std::string utc_stamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

// Result files of one command invocation, collected in <out-dir>/<command>_<tag>/
// next to the manifest.json that produced them.
class RunOutput {
public:
    RunOutput(std::string command, const std::string& out_dir, std::string tag, std::string format)
        : command_(std::move(command)), format_(std::move(format)), started_(std::chrono::steady_clock::now())
    {
        if (tag.empty()) tag = utc_stamp();
        stem_ = command_ + "_" + tag;
        fs::path base = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
        dir_ = base / stem_;
        for (int i = 1; fs::exists(dir_); ++i) dir_ = base / (stem_ + "-" + std::to_string(i));
        fs::create_directories(dir_);
    }

    void table(const Table& table, const std::string& suffix = {})
    {
        const std::string name = stem_ + (suffix.empty() ? "" : "_" + suffix);
        if (format_ == "csv" || format_ == "both") {
            write_table(table, TableFormat::csv, dir_ / (name + ".csv"));
            outputs_.push_back(name + ".csv");
        }
        if (format_ == "json" || format_ == "both") {
            write_table(table, TableFormat::json, dir_ / (name + ".json"));
            outputs_.push_back(name + ".json");
        }
    }

    void finish(const std::string& full_command, const std::vector<std::string>& argv, json params,
                std::optional<std::uint64_t> seed, std::ostream& out)
    {
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        json manifest;
        manifest["command"] = full_command;
        manifest["argv"] = argv;
        manifest["parameters"] = std::move(params);
        manifest["seed"] = seed ? json(*seed) : json(nullptr);
        manifest["version"] = kVersion;
        manifest["outputs"] = outputs_;
        manifest["started_at_utc"] = utc_stamp();
        manifest["duration_seconds"] = seconds;
        std::ofstream f(dir_ / "manifest.json");
        f << manifest.dump(2) << "\n";
        if (!f) throw IoError("cannot write manifest in " + dir_.string());
        out << "wrote " << dir_.string() << " (" << outputs_.size() << " result files + manifest.json)\n";
    }

private:
    std::string command_;
    std::string format_;
    std::string stem_;
    fs::path dir_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point started_;
};

struct CommonFlags {
    std::string out_dir;
    std::string tag;
    std::string format = "both";
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
};

struct RosterFlags {
    std::string family = "sl";
    std::string procedures;
    bool uncapped = false;
};

std::vector<ProcedureSpec> make_roster(double q, const RosterFlags& flags, bool include_oracle = true)
{
    std::vector<Family> families;
    if (flags.family == "sl" || flags.family == "both") families.push_back(Family::SL);
    if (flags.family == "bh" || flags.family == "both") families.push_back(Family::BH);

    std::vector<ProcedureSpec> roster;
    for (Family family : families) {
        std::vector<ProcedureSpec> specs;
        if (flags.procedures.empty()) {
            specs = default_roster(q, family);
        } else {
            std::stringstream ss(flags.procedures);
            std::string name;
            while (std::getline(ss, name, ',')) {
                if (!name.empty()) specs.push_back(roster_entry(name, q, family));
            }
        }
        for (auto& spec : specs) {
            if (!include_oracle && spec.adjustment == Adjustment::oracle) continue;
            if (flags.uncapped) spec.domain_cap = DomainCap::uncapped;
            roster.push_back(std::move(spec));
        }
    }
    if (roster.empty()) throw ConfigurationError("roster is empty");
    return roster;
}

json roster_json(const RosterFlags& flags)
{
    return json{{"family", flags.family}, {"procedures", flags.procedures}, {"uncapped", flags.uncapped}};
}

struct SimFlags {
    std::string config = "alternating";
    double pi0 = 0.75;
    std::size_t m = 64;
    std::size_t n = 10000;
    double q = 0.2;
    double rho = 0.0;
    std::uint64_t seed = 20240601;
    std::string q_grid;
    std::string rho_grid = "0:1:0.1";
    std::string pi0_list = "0.25,0.5,0.75";
    std::string m_list;
    std::string q_list = "0.1,0.2,0.3";
    std::size_t instances = 100000;
    std::size_t n_exp = 10000;
};

SimConfig sim_config(const SimFlags& f)
{
    SimConfig sim;
    sim.m = f.m;
    sim.pi0 = f.pi0;
    sim.kind = alt_kind_from_string(f.config);
    sim.rho = f.rho;
    sim.seed = f.seed;
    validate(sim);
    return sim;
}

json sim_json(const SimFlags& f)
{
    return json{{"config", f.config}, {"pi0", f.pi0}, {"m", f.m}, {"n", f.n}, {"q", f.q}, {"rho", f.rho},
                {"seed", f.seed}};
}

void add_common(CLI::App* app, CommonFlags& c)
{
    app->add_option("--out-dir", c.out_dir, "Output directory (default: $BFDR_OUTPUT_DIR or .)");
    app->add_option("--tag", c.tag, "Run tag used in file names (default: UTC timestamp)");
    app->add_option("--format", c.format, "Result format")->check(CLI::IsMember({"csv", "json", "both"}));
    app->add_option("--workers", c.workers, "Worker threads for Monte Carlo loops")->check(CLI::PositiveNumber);
}

void add_roster(CLI::App* app, RosterFlags& r)
{
    app->add_option("--family", r.family, "Procedure family")->check(CLI::IsMember({"sl", "bh", "both"}));
    app->add_option("--procedures", r.procedures, "Comma-separated roster subset, e.g. \"SL,TSSL(q),Storey(1/2)\"");
    app->add_flag("--uncapped", r.uncapped, "Let plug-in procedures reject p-values above q");
}

void add_sim(CLI::App* app, SimFlags& s)
{
    app->add_option("--config", s.config, "Mean configuration")->check(CLI::IsMember({"alternating", "all_at_5", "all-at-5"}));
    app->add_option("--pi0", s.pi0, "True null proportion");
    app->add_option("--m", s.m, "Number of hypotheses");
    app->add_option("--n", s.n, "Monte Carlo replications")->check(CLI::PositiveNumber);
    app->add_option("--q", s.q, "Procedure level");
    app->add_option("--rho", s.rho, "Equicorrelation of the test statistics");
    app->add_option("--seed", s.seed, "Master seed");
}

std::string resolve_out_dir(const CommonFlags& c)
{
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("BFDR_OUTPUT_DIR")) return env;
    return ".";
}

struct Invocation {
    std::string command;
    std::vector<std::string> argv;
    std::ostream& out;
    std::ostream& err;
};

// ---- simulate ----------------------------------------------------------------

void simulate_bfdr_curve(const Invocation& inv, const CommonFlags& c, const SimFlags& s, const RosterFlags& r)
{
    const SimConfig sim = sim_config(s);
    const auto q_grid = parse_grid(s.q_grid.empty() ? "0.05:0.4:0.05" : s.q_grid);
    RunOutput run("bfdr-curve", resolve_out_dir(c), c.tag, c.format);
    const auto table = bfdr_curve(sim, [&](double q) { return make_roster(q, r); }, q_grid, s.n,
                                  ExperimentOptions{c.workers, false});
    run.table(metrics_to_table(table));
    json params = sim_json(s);
    params["q_grid"] = q_grid;
    params["roster"] = roster_json(r);
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

void simulate_corr_sweep(const Invocation& inv, const CommonFlags& c, const SimFlags& s, const RosterFlags& r)
{
    const SimConfig sim = sim_config(s);
    const auto rho_grid = parse_grid(s.rho_grid);
    RunOutput run("corr-sweep", resolve_out_dir(c), c.tag, c.format);
    const auto roster = make_roster(s.q, r);
    run.table(metrics_to_table(corr_sweep(sim, rho_grid, roster, s.n, ExperimentOptions{c.workers, false})));
    json params = sim_json(s);
    params["rho_grid"] = rho_grid;
    params["roster"] = roster_json(r);
    params["tie_rule"] = "at rho = 1 null p-values tie exactly; the boundary is the tied hypothesis with the "
                         "largest original index among ranks 1..R under the stable order";
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

void simulate_power_heatmap(const Invocation& inv, const CommonFlags& c, const SimFlags& s, const RosterFlags& r)
{
    SimConfig sim = sim_config(s);
    const auto pi0_grid = parse_grid(s.pi0_list);
    const auto m_grid = parse_size_list(s.m_list.empty() ? "16,64,256" : s.m_list);
    RunOutput run("power-heatmap", resolve_out_dir(c), c.tag, c.format);
    const auto roster = make_roster(s.q, r);
    run.table(metrics_to_table(power_heatmap(sim, pi0_grid, m_grid, roster, s.n, ExperimentOptions{c.workers, false})));
    json params = sim_json(s);
    params["pi0_list"] = pi0_grid;
    params["m_list"] = m_grid;
    params["roster"] = roster_json(r);
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

void simulate_lfdr_variability(const Invocation& inv, const CommonFlags& c, const SimFlags& s, RosterFlags r)
{
    const auto q_grid = parse_grid(s.q_grid.empty() ? "0.1:0.3:0.05" : s.q_grid);
    const auto m_grid = parse_size_list(s.m_list.empty() ? "64,1024" : s.m_list);
    if (r.procedures.empty()) r.procedures = "TSSL(q),Storey(1/2),AS(0.1;q),LSL,SL,Oracle";
    RunOutput run("lfdr-variability", resolve_out_dir(c), c.tag, c.format);
    MetricsTable all;
    for (std::size_t m : m_grid) {
        SimFlags point = s;
        point.m = m;
        const auto table = bfdr_curve(sim_config(point), [&](double q) { return make_roster(q, r); }, q_grid, s.n,
                                      ExperimentOptions{c.workers, true});
        all.insert(all.end(), table.begin(), table.end());
    }
    run.table(metrics_to_table(all));

    // oracle thresholds t* with lfdr(t*) = q for reference
    Table oracle;
    oracle.columns = {"config", "pi0", "q", "t_star"};
    for (double q : q_grid) {
        const SimConfig sim = sim_config(s);
        const AltConfig alt{sim.kind, static_cast<double>(sim.null_count()) / static_cast<double>(sim.m)};
        Cell t;
        try {
            t = oracle_threshold(alt, q);
        } catch (const DomainError&) {
        }
        oracle.rows.push_back({to_string(sim.kind), alt.pi0, q, t});
    }
    run.table(oracle, "oracle");

    json params = sim_json(s);
    params["q_grid"] = q_grid;
    params["m_list"] = m_grid;
    params["roster"] = roster_json(r);
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

void simulate_lemmas(const Invocation& inv, const CommonFlags& c, const SimFlags& s)
{
    RunOutput run("lemmas", resolve_out_dir(c), c.tag, c.format);
    Table table;
    table.columns = {"lemma", "parameters", "n", "estimate", "se", "reference", "pass"};
    auto pass_cell = [](bool ok) { return Cell{static_cast<std::int64_t>(ok ? 1 : 0)}; };

    {
        SimFlags base = s;
        base.m = s.m;
        const SimConfig sim = sim_config(base);
        auto others = sample_pvalues(sim, 0).values;
        others.pop_back();
        const auto est = lemma_sl_key_check(others, s.q, s.n, s.seed);
        const double expect = s.q / static_cast<double>(s.m);
        const bool ok = std::fabs(est.estimate - expect) <= 3.0 * std::max(est.se, 1e-300);
        table.rows.push_back({std::string("sl_key"), "m=" + std::to_string(s.m) + ";q=" + format_double(s.q),
                              static_cast<std::int64_t>(est.n), est.estimate, est.se, expect, pass_cell(ok)});
        inv.out << "sl_key: estimate " << est.estimate << " vs q/m " << expect << (ok ? "  PASS\n" : "  FAIL\n");
    }
    {
        const auto rep = lemma_p_to_one_check(s.instances, s.seed);
        const bool ok = rep.violations == 0;
        table.rows.push_back({std::string("p_to_one"),
                              "instances=" + std::to_string(rep.instances) + ";applicable=" + std::to_string(rep.applicable),
                              static_cast<std::int64_t>(rep.instances), static_cast<double>(rep.violations), Cell{},
                              0.0, pass_cell(ok)});
        inv.out << "p_to_one: " << rep.violations << " violations in " << rep.applicable << " applicable instances"
                << (ok ? "  PASS\n" : "  FAIL\n");
    }
    for (double pi0 : {0.5, 0.75, 1.0}) {
        for (double q : {0.1, 0.2}) {
            SimFlags point = s;
            point.pi0 = pi0;
            const auto est = expectation_bound_check(sim_config(point), q, s.n_exp, ExperimentOptions{c.workers, false});
            const double bound = q / (1.0 - q);
            const bool ok = est.estimate <= bound + 3.0 * est.se;
            table.rows.push_back({std::string("expectation_bound"),
                                  "pi0=" + format_double(pi0) + ";q=" + format_double(q) + ";m=" + std::to_string(s.m),
                                  static_cast<std::int64_t>(est.n), est.estimate, est.se, bound, pass_cell(ok)});
            inv.out << "expectation_bound pi0=" << pi0 << " q=" << q << ": " << est.estimate << " <= " << bound
                    << (ok ? "  PASS\n" : "  FAIL\n");
        }
    }
    run.table(table);
    json params = sim_json(s);
    params["instances"] = s.instances;
    params["n_exp"] = s.n_exp;
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

void simulate_asymptotics(const Invocation& inv, const CommonFlags& c, const SimFlags& s)
{
    RunOutput run("asymptotics", resolve_out_dir(c), c.tag, c.format);
    const AltKind kind = alt_kind_from_string(s.config);

    Table limits;
    limits.columns = {"config", "pi0", "q", "t1_star", "t2_star", "cdf_t1", "limit", "bound", "holds"};
    for (double pi0 : parse_grid(s.pi0_list)) {
        for (double q : parse_grid(s.q_list)) {
            const PopulationModel model(AltConfig{kind, pi0});
            try {
                const auto th = population_thresholds(model, q);
                const double limit = q * pi0 / (1.0 - th.cdf_at_t1);
                const double bound = q / (1.0 - q);
                limits.rows.push_back({to_string(kind), pi0, q, th.t1, th.t2, th.cdf_at_t1, limit, bound,
                                       static_cast<std::int64_t>(limit <= bound ? 1 : 0)});
            } catch (const DomainError& e) {
                inv.err << "warning: pi0=" << pi0 << " q=" << q << ": " << e.what() << "\n";
                limits.rows.push_back({to_string(kind), pi0, q, Cell{}, Cell{}, Cell{}, Cell{}, q / (1.0 - q), Cell{}});
            }
        }
    }
    run.table(limits);

    const auto m_list = parse_size_list(s.m_list.empty() ? "256,1024,4096" : s.m_list);
    const PopulationModel model(AltConfig{kind, s.pi0});
    const auto probe = convergence_probe(model, s.q, m_list, s.n, s.seed, s.rho, ExperimentOptions{c.workers, false});
    Table probe_table;
    probe_table.columns = {"config", "pi0", "q", "rho", "m", "n_reps", "limit", "mean_gap", "gap_se", "mean_tau1_gap"};
    for (const auto& row : probe) {
        probe_table.rows.push_back({to_string(kind), s.pi0, s.q, s.rho, static_cast<std::int64_t>(row.m),
                                    static_cast<std::int64_t>(row.n_reps), row.limit, row.mean_gap, row.gap_se,
                                    row.mean_tau1_gap});
    }
    run.table(probe_table, "probe");

    json params = sim_json(s);
    params["pi0_list"] = s.pi0_list;
    params["q_list"] = s.q_list;
    params["m_list"] = m_list;
    run.finish(inv.command, inv.argv, params, s.seed, inv.out);
}

// ---- analyze -----------------------------------------------------------------

struct AnalyzeFlags {
    std::string input;
    std::string column = "p";
    std::string id_column;
    std::string sidedness = "one";
    std::string direction_column;
    bool selection_adjust = false;
    bool inclusive_boundary = false;
    std::string q_list = "0.1,0.2,0.3";
};

DatasetDescriptor descriptor(const AnalyzeFlags& a)
{
    DatasetDescriptor d;
    d.path = a.input;
    d.column = a.column;
    if (!a.id_column.empty()) d.id_column = a.id_column;
    d.sidedness = a.sidedness == "two" ? Sidedness::two_sided : Sidedness::one_sided;
    if (!a.direction_column.empty()) d.direction_column = a.direction_column;
    d.selection_adjust = a.selection_adjust;
    d.selection_inclusive = a.inclusive_boundary;
    return d;
}

std::optional<double> sellke_at(double t)
{
    if (t > 0.0 && t < std::exp(-1.0)) return sellke_alpha(t);
    return std::nullopt;
}

std::optional<double> sellke_pi0_at(double t, double pi0)
{
    if (t > 0.0 && t < std::exp(-1.0) && pi0 > 0.0 && pi0 < 1.0) return sellke_alpha_pi0(t, pi0);
    return std::nullopt;
}

void analyze(const Invocation& inv, const CommonFlags& c, const AnalyzeFlags& a, const RosterFlags& r)
{
    const PValueSample sample = load_pvalues(descriptor(a));
    if (sample.empty()) throw ValidationError("no p-values left to analyze after selection adjustment");
    const auto q_list = parse_grid(a.q_list);

    std::optional<MonotoneDensity> density;
    try {
        density.emplace(grenander_fit(sample));
    } catch (const ValidationError& e) {
        inv.err << "warning: lfdr estimates unavailable: " << e.what() << "\n";
    }

    RunOutput run("analyze", resolve_out_dir(c), c.tag, c.format);
    std::vector<RejectionSummary> summaries;
    Table discoveries;
    discoveries.columns = {"procedure", "family", "q", "rank", "index", "label", "p_value", "est_lfdr",
                           "sellke_alpha", "sellke_alpha_pi0"};
    Table pi0_table;
    pi0_table.columns = {"estimator", "family", "q", "pi0_hat", "lambda_hat"};

    for (double q : q_list) {
        for (const auto& spec : make_roster(q, r, false)) {
            const auto res = run_procedure(spec, sample);
            const auto& o = res.outcome;
            RejectionSummary s;
            s.procedure = spec.name;
            s.family = to_string(spec.family);
            s.q = q;
            s.level = o.stage_trace.adjusted_level.value_or(spec.reduced_level ? q / (1.0 + q) : q);
            s.r = o.r;
            s.m = sample.size();
            s.threshold = o.threshold;
            s.pi0_used = res.pi0_used;
            if (o.boundary_index) {
                s.boundary_label = sample.labels ? (*sample.labels)[*o.boundary_index]
                                                 : std::to_string(*o.boundary_index);
            }
            if (o.r > 0) {
                if (density) s.est_lfdr_at_threshold = lfdr_hat(res.pi0_used, *density, o.threshold);
                s.sellke_alpha_at_threshold = sellke_at(o.threshold);
                s.sellke_alpha_pi0_at_threshold = sellke_pi0_at(o.threshold, res.pi0_used);
            }
            summaries.push_back(s);

            for (std::size_t k = 0; k < o.rejected.size(); ++k) {
                const std::size_t idx = o.rejected[k];
                const double p = sample.values[idx];
                auto opt = [](const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; };
                discoveries.rows.push_back(
                    {spec.name, to_string(spec.family), q, static_cast<std::int64_t>(k + 1),
                     static_cast<std::int64_t>(idx), sample.labels ? Cell{(*sample.labels)[idx]} : Cell{}, p,
                     density ? Cell{lfdr_hat(res.pi0_used, *density, p)} : Cell{}, opt(sellke_at(p)),
                     opt(sellke_pi0_at(p, res.pi0_used))});
            }

            if (spec.adjustment != Adjustment::none) {
                Cell lambda;
                if (spec.adjustment == Adjustment::storey_fixed) lambda = *spec.lambda;
                if (spec.adjustment == Adjustment::storey_adaptive) {
                    lambda = *adaptive_storey_pi0(sample, *spec.delta, spec.grid_start.value_or(q)).lambda_hat;
                }
                pi0_table.rows.push_back({spec.name, to_string(spec.family), q, res.pi0_used, lambda});
            }
        }
    }

    run.table(rejections_to_table(summaries));
    run.table(pi0_table, "pi0");
    run.table(discoveries, "discoveries");

    for (const auto& s : summaries) {
        inv.out << s.procedure << " q=" << s.q << ": " << s.r << " (" << rejection_percentage(s.r, s.m) << "%)\n";
    }
    json params{{"input", a.input},
                {"column", a.column},
                {"id_column", a.id_column},
                {"sidedness", a.sidedness},
                {"direction_column", a.direction_column},
                {"selection_adjust", a.selection_adjust},
                {"selection_rule", a.inclusive_boundary ? "p <= 0.025, times 40" : "p < 0.025, times 40"},
                {"m_after_selection", sample.size()},
                {"q_list", q_list},
                {"roster", roster_json(r)}};
    run.finish(inv.command, inv.argv, params, std::nullopt, inv.out);
}

// ---- calibrate ---------------------------------------------------------------

struct CalibrateFlags {
    std::string pi0 = "0.5";
    std::string t_grid = "0.001:0.367:0.001";
    std::string q_list = "0.1,0.15,0.2,0.25,0.3";
    AnalyzeFlags data;
};

// inverse of an increasing calibration curve on (0, 1/e)
std::optional<double> invert(const std::function<double(double)>& curve, double level)
{
    double lo = 1e-300;
    double hi = std::exp(-1.0) * (1.0 - 1e-15);
    if (!(curve(lo) < level && curve(hi) > level)) return std::nullopt;
    for (int i = 0; i < 2000 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (curve(mid) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void calibrate(const Invocation& inv, const CommonFlags& c, const CalibrateFlags& f)
{
    std::optional<PValueSample> sample;
    if (!f.data.input.empty()) sample = load_pvalues(descriptor(f.data));

    double pi0 = 0.5;
    std::string pi0_source = "value";
    if (f.pi0 == "storey" || f.pi0 == "lsl") {
        if (!sample) throw ConfigurationError("--pi0 " + f.pi0 + " needs --input");
        pi0 = f.pi0 == "storey" ? storey_pi0(*sample, 0.5).value : lsl_pi0(*sample).value;
        pi0_source = f.pi0 == "storey" ? "Storey(1/2)" : "LSL";
    } else {
        pi0 = std::stod(f.pi0);
    }
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw DomainError("calibration needs pi0 in (0,1), got " + format_double(pi0));

    std::optional<MonotoneDensity> density;
    if (sample) density.emplace(grenander_fit(*sample));

    const double edge = std::exp(-1.0);
    std::vector<double> grid;
    std::size_t clipped = 0;
    for (double t : parse_grid(f.t_grid)) {
        if (t > 0.0 && t < edge) {
            grid.push_back(t);
        } else {
            ++clipped;
        }
    }
    if (clipped) inv.err << "warning: clipped " << clipped << " grid points outside (0, 1/e)\n";
    if (grid.empty()) throw DomainError("calibration grid has no points inside (0, 1/e)");

    RunOutput run("calibrate", resolve_out_dir(c), c.tag, c.format);
    Table curves;
    curves.columns = {"t", "alpha", "alpha_pi0", "pi0_hat", "lfdr_hat"};
    for (double t : grid) {
        curves.rows.push_back({t, sellke_alpha(t), sellke_alpha_pi0(t, pi0), pi0,
                               density ? Cell{lfdr_hat(pi0, *density, t)} : Cell{}});
    }
    run.table(curves);

    Table cutoffs;
    cutoffs.columns = {"q", "t_alpha", "t_alpha_pi0"};
    for (double q : parse_grid(f.q_list)) {
        const auto a = invert([](double t) { return sellke_alpha(t); }, q);
        const auto b = invert([pi0](double t) { return sellke_alpha_pi0(t, pi0); }, q);
        cutoffs.rows.push_back({q, a ? Cell{*a} : Cell{}, b ? Cell{*b} : Cell{}});
    }
    run.table(cutoffs, "cutoffs");

    json params{{"pi0", pi0}, {"pi0_source", pi0_source}, {"t_grid", f.t_grid}, {"q_list", f.q_list},
                {"input", f.data.input}};
    run.finish(inv.command, inv.argv, params, std::nullopt, inv.out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Adaptive boundary-FDR procedures: simulation, analysis and calibration", "bfdr"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonFlags common;
    SimFlags sim;
    RosterFlags roster;
    AnalyzeFlags analyze_flags;
    CalibrateFlags calibrate_flags;
    std::function<void(const Invocation&)> action;
    std::string command;

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiments");
    simulate->require_subcommand(1);

    auto* curve = simulate->add_subcommand("bfdr-curve", "bFDR, FDR and power versus q");
    add_common(curve, common);
    add_sim(curve, sim);
    add_roster(curve, roster);
    curve->add_option("--q-grid", sim.q_grid, "q values, lo:hi:step or list (default 0.05:0.4:0.05)");
    curve->callback([&] {
        command = "simulate bfdr-curve";
        action = [&](const Invocation& inv) { simulate_bfdr_curve(inv, common, sim, roster); };
    });

    auto* corr = simulate->add_subcommand("corr-sweep", "bFDR and pi0 estimates versus equicorrelation");
    add_common(corr, common);
    add_sim(corr, sim);
    add_roster(corr, roster);
    corr->add_option("--rho-grid", sim.rho_grid, "rho values (default 0:1:0.1)");
    corr->callback([&] {
        command = "simulate corr-sweep";
        action = [&](const Invocation& inv) { simulate_corr_sweep(inv, common, sim, roster); };
    });

    auto* heat = simulate->add_subcommand("power-heatmap", "Power relative to the oracle over (pi0, m)");
    add_common(heat, common);
    add_sim(heat, sim);
    add_roster(heat, roster);
    heat->add_option("--pi0-list", sim.pi0_list, "pi0 values (default 0.25,0.5,0.75)");
    heat->add_option("--m-list", sim.m_list, "m values (default 16,64,256)");
    heat->callback([&] {
        command = "simulate power-heatmap";
        action = [&](const Invocation& inv) { simulate_power_heatmap(inv, common, sim, roster); };
    });

    auto* lfdr = simulate->add_subcommand("lfdr-variability", "True and estimated lfdr at the cutoffs");
    add_common(lfdr, common);
    add_sim(lfdr, sim);
    add_roster(lfdr, roster);
    lfdr->add_option("--q-grid", sim.q_grid, "q values (default 0.1:0.3:0.05)");
    lfdr->add_option("--m-list", sim.m_list, "m values (default 64,1024)");
    lfdr->callback([&] {
        command = "simulate lfdr-variability";
        action = [&](const Invocation& inv) { simulate_lfdr_variability(inv, common, sim, roster); };
    });

    auto* lemmas = simulate->add_subcommand("lemmas", "Executable checks of the supporting lemmas");
    add_common(lemmas, common);
    add_sim(lemmas, sim);
    lemmas->add_option("--instances", sim.instances, "Random instances for the p-to-one check");
    lemmas->add_option("--n-exp", sim.n_exp, "Replications per expectation-bound setting");
    lemmas->callback([&] {
        command = "simulate lemmas";
        action = [&](const Invocation& inv) { simulate_lemmas(inv, common, sim); };
    });

    auto* asym = simulate->add_subcommand("asymptotics", "Population thresholds, limits and convergence probe");
    add_common(asym, common);
    add_sim(asym, sim);
    asym->add_option("--pi0-list", sim.pi0_list, "pi0 values for the limit table");
    asym->add_option("--q-list", sim.q_list, "q values for the limit table");
    asym->add_option("--m-list", sim.m_list, "m values for the probe (default 256,1024,4096)");
    asym->callback([&] {
        command = "simulate asymptotics";
        action = [&](const Invocation& inv) { simulate_asymptotics(inv, common, sim); };
    });

    auto add_dataset = [](CLI::App* sub, AnalyzeFlags& a, bool required) {
        auto* opt = sub->add_option("--input", a.input, "CSV file with a header row");
        if (required) opt->required();
        sub->add_option("--column", a.column, "p-value column");
        sub->add_option("--id-column", a.id_column, "identifier column");
        sub->add_option("--sidedness", a.sidedness, "p-value sidedness")->check(CLI::IsMember({"one", "two"}));
        sub->add_option("--direction-column", a.direction_column, "effect sign column for two-sided input");
        sub->add_flag("--selection-adjust", a.selection_adjust, "keep p < 0.025 and multiply by 40");
        sub->add_flag("--inclusive-boundary", a.inclusive_boundary, "selection keeps p <= 0.025");
    };

    auto* an = app.add_subcommand("analyze", "Run the roster on a real p-value dataset");
    add_common(an, common);
    add_roster(an, roster);
    add_dataset(an, analyze_flags, true);
    an->add_option("--q-list", analyze_flags.q_list, "levels (default 0.1,0.2,0.3)");
    an->callback([&] {
        command = "analyze";
        action = [&](const Invocation& inv) { analyze(inv, common, analyze_flags, roster); };
    });

    auto* cal = app.add_subcommand("calibrate", "Calibration curves alpha(t) and alpha_pi0(t)");
    add_common(cal, common);
    add_dataset(cal, calibrate_flags.data, false);
    cal->add_option("--pi0", calibrate_flags.pi0, "pi0 value, or 'storey' / 'lsl' estimated from --input");
    cal->add_option("--t-grid", calibrate_flags.t_grid, "t values inside (0, 1/e)");
    cal->add_option("--q-list", calibrate_flags.q_list, "cutoff levels");
    cal->callback([&] {
        command = "calibrate";
        action = [&](const Invocation& inv) { calibrate(inv, common, calibrate_flags); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    std::vector<std::string> args(argv, argv + argc);
    try {
        action(Invocation{command, args, out, err});
    } catch (const std::invalid_argument& e) {
        // bad grid text or flag values that only fail once interpreted
        err << "error: " << e.what() << "\n";
        return dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigurationError*>(&e) ? 1 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace bfdr::cli
