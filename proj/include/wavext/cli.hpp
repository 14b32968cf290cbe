#pragma once

// Experiment harness behind the `wavext` command line tool: run
// configuration, JSON run records, and one function per subcommand.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ctime>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "az.hpp"
#include "cascade.hpp"
#include "domain.hpp"
#include "dual.hpp"
#include "dwt.hpp"
#include "expression.hpp"
#include "filters.hpp"
#include "solvers.hpp"
#include "system.hpp"

namespace wavext::cli {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

/// dbP | cdfPQ | cdf(P,Q) | haar, or a bare family name completed by p / p_dual.
inline FilterBank parse_family(const std::string& family, int p = 0, int p_dual = 0)
{
    std::smatch m;
    const std::string f = family;
    if (f == "haar") return daubechies_filter(1);
    if (std::regex_match(f, m, std::regex(R"(db(\d+))"))) return daubechies_filter(std::stoi(m[1]));
    if (std::regex_match(f, m, std::regex(R"(cdf\((\d+),(\d+)\))"))) return cdf_filter(std::stoi(m[1]), std::stoi(m[2]));
    if (std::regex_match(f, m, std::regex(R"(cdf(\d)(\d))"))) return cdf_filter(std::stoi(m[1]), std::stoi(m[2]));
    if (f == "db" || f == "daubechies") {
        if (p < 1) throw ConfigError("family " + f + " needs --p");
        return daubechies_filter(p);
    }
    if (f == "cdf") {
        if (p < 1 || p_dual < 1) throw ConfigError("family cdf needs --p and --pdual");
        return cdf_filter(p, p_dual);
    }
    throw ConfigError("unknown family '" + family + "' (expected dbP, cdfPQ, cdf(P,Q), haar, or db/cdf with --p/--pdual)");
}

inline const std::set<std::string>& solver_names()
{
    static const std::set<std::string> s{"az", "reduced", "sparse", "smoothed", "adaptive", "qr", "sparse-qr"};
    return s;
}

struct RunConfig {
    std::string command = "approximate";
    std::string family = "cdf33";
    int p = 0;
    int p_dual = 0;
    std::vector<index_t> N{256};
    std::vector<int> q{2};
    std::string domain = "interval:0,0.5";
    std::string function = "exp1d";
    std::string solver = "reduced";
    std::string variant = "reduced";  ///< base pipeline for smoothed / adaptive
    double tol = default_tol;
    std::uint64_t seed = 0;
    std::vector<index_t> sweep;       ///< per-dimension N values for sweeps
    int repetitions = 3;
    double weight_factor = 0.5;       ///< smoothed: weight ratio between consecutive scales
    int levels = 8;                   ///< cascade resolution
    int J = 10;                       ///< dwt-norms transform depth
    std::string output;
    std::string format;               ///< json | csv, empty picks the command default
    std::string samples;              ///< optional CSV of approximant samples
    std::string coefficients;         ///< optional CSV of wavelet coefficients

    bool operator==(const RunConfig&) const = default;

    json to_json() const
    {
        return json{{"command", command}, {"family", family},   {"p", p},
                    {"p_dual", p_dual},   {"N", N},             {"q", q},
                    {"domain", domain},   {"function", function}, {"solver", solver},
                    {"variant", variant}, {"tol", tol},         {"seed", seed},
                    {"sweep", sweep},     {"repetitions", repetitions}, {"weight_factor", weight_factor},
                    {"levels", levels},   {"J", J},             {"output", output},
                    {"format", format},   {"samples", samples},  {"coefficients", coefficients}};
    }

    static RunConfig from_json(const json& j)
    {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        RunConfig c;
        const json ref = c.to_json();
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ref.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
        try {
            auto get = [&](const char* k, auto& dst) {
                if (j.contains(k)) j.at(k).get_to(dst);
            };
            get("command", c.command);
            get("family", c.family);
            get("p", c.p);
            get("p_dual", c.p_dual);
            get("N", c.N);
            get("q", c.q);
            get("domain", c.domain);
            get("function", c.function);
            get("solver", c.solver);
            get("variant", c.variant);
            get("tol", c.tol);
            get("seed", c.seed);
            get("sweep", c.sweep);
            get("repetitions", c.repetitions);
            get("weight_factor", c.weight_factor);
            get("levels", c.levels);
            get("J", c.J);
            get("output", c.output);
            get("format", c.format);
            get("samples", c.samples);
            get("coefficients", c.coefficients);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad config value: ") + e.what());
        }
        return c;
    }

    /// Checks that do not need any construction work.
    void validate() const
    {
        static const std::set<std::string> commands{"approximate", "convergence", "timing", "indexsets",
                                                    "duals",       "filters",     "cascade", "dwt-norms"};
        if (!commands.count(command)) throw ConfigError("unknown command '" + command + "'");
        if (!solver_names().count(solver)) throw ConfigError("unknown solver '" + solver + "'");
        if (variant != "az" && variant != "reduced" && variant != "sparse")
            throw ConfigError("variant must be az, reduced or sparse");
        if (!(tol > 0 && tol < 1)) throw ConfigError("tol must be in (0, 1)");
        if (N.empty() || q.empty()) throw ConfigError("N and q must not be empty");
        for (auto n : N)
            if (!is_pow2(n) || n < 2) throw ConfigError("N entries must be powers of two >= 2");
        for (auto n : sweep)
            if (!is_pow2(n) || n < 2) throw ConfigError("sweep entries must be powers of two >= 2");
        for (int v : q)
            if (v < 2) throw ConfigError("q entries must be >= 2");
        if (!format.empty() && format != "json" && format != "csv") throw ConfigError("format must be json or csv");
        if (!(weight_factor > 0)) throw ConfigError("weight_factor must be positive");
        if (levels < 1 || levels > 16) throw ConfigError("levels must be in 1..16");
        if (J < 1 || J > 14) throw ConfigError("J must be in 1..14");
        const bool table = command == "dwt-norms" && p == 0 && (family == "cdf" || family == "db");
        if (!table) parse_family(family, p, p_dual);
    }
};

struct RunRecord {
    int schema = schema_version;
    RunConfig config;
    index_t N_total = 0;
    index_t M = 0;
    index_t K = 0, L = 0, Mrows = 0;
    double residual = 0;
    double coef_norm = 0;
    std::vector<double> scale_norms;
    std::vector<double> exterior_scale_norms;
    index_t plunge_rank = 0;
    std::map<std::string, double> timings;
    std::vector<std::string> warnings;
    std::string timestamp;

    bool operator==(const RunRecord&) const = default;

    json to_json() const
    {
        return json{{"schema_version", schema},
                    {"config", config.to_json()},
                    {"N_total", N_total},
                    {"M", M},
                    {"index_sets", {{"K", K}, {"L", L}, {"Mrows", Mrows}}},
                    {"residual", residual},
                    {"coef_norm", coef_norm},
                    {"scale_norms", scale_norms},
                    {"exterior_scale_norms", exterior_scale_norms},
                    {"plunge_rank", plunge_rank},
                    {"timings", timings},
                    {"warnings", warnings},
                    {"timestamp", timestamp}};
    }

    static RunRecord from_json(const json& j)
    {
        RunRecord r;
        r.schema = j.at("schema_version").get<int>();
        if (r.schema != schema_version) throw ConfigError("unsupported record schema " + std::to_string(r.schema));
        r.config = RunConfig::from_json(j.at("config"));
        j.at("N_total").get_to(r.N_total);
        j.at("M").get_to(r.M);
        j.at("index_sets").at("K").get_to(r.K);
        j.at("index_sets").at("L").get_to(r.L);
        j.at("index_sets").at("Mrows").get_to(r.Mrows);
        j.at("residual").get_to(r.residual);
        j.at("coef_norm").get_to(r.coef_norm);
        j.at("scale_norms").get_to(r.scale_norms);
        j.at("exterior_scale_norms").get_to(r.exterior_scale_norms);
        j.at("plunge_rank").get_to(r.plunge_rank);
        j.at("timings").get_to(r.timings);
        j.at("warnings").get_to(r.warnings);
        j.at("timestamp").get_to(r.timestamp);
        return r;
    }
};

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw Error("slope needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline std::vector<index_t> expand_dims(const std::vector<index_t>& v, int d)
{
    if (static_cast<int>(v.size()) == d) return v;
    if (v.size() == 1) return std::vector<index_t>(static_cast<std::size_t>(d), v[0]);
    throw ConfigError("expected 1 or " + std::to_string(d) + " entries, got " + std::to_string(v.size()));
}

inline std::vector<int> expand_q(const std::vector<int>& v, int d)
{
    if (static_cast<int>(v.size()) == d) return v;
    if (v.size() == 1) return std::vector<int>(static_cast<std::size_t>(d), v[0]);
    throw ConfigError("expected 1 or " + std::to_string(d) + " q entries, got " + std::to_string(v.size()));
}

inline Variant parse_variant(const std::string& v)
{
    if (v == "az") return Variant::vanilla;
    if (v == "sparse") return Variant::sparse;
    return Variant::reduced;
}

struct Setup {
    FilterBank bank;
    DomainMask mask;
    Expression f;
    BasisSpec basis;
};

inline Setup setup(const RunConfig& c, const std::vector<index_t>& N)
{
    c.validate();
    Setup s{parse_family(c.family, c.p, c.p_dual), parse_domain(c.domain), parse_function(c.function), {}};
    if (s.f.arity() > s.mask.dim) throw ConfigError("function uses more variables than the domain dimension");
    s.basis = make_basis(s.bank, expand_dims(N, s.mask.dim), expand_q(c.q, s.mask.dim));
    return s;
}

inline auto as_callable(const Expression& e)
{
    return [&e](std::span<const double> t) { return e(t); };
}

} // namespace detail

/// Solve once with the configured solver at size N.
inline RunRecord solve_record(const RunConfig& c, const std::vector<index_t>& N, Eigen::VectorXd* coefficients = nullptr,
                              std::optional<FrameSystem>* keep = nullptr)
{
    const auto st = detail::setup(c, N);
    RunRecord rec;
    rec.config = c;
    rec.config.N = st.basis.sizes();
    rec.timestamp = utc_timestamp();
    AZSolution sol;
    std::optional<FrameSystem> sys;

    if (c.solver == "adaptive") {
        auto res = adaptive_weighted_solve(st.basis, st.mask, detail::as_callable(st.f), detail::parse_variant(c.variant),
                                           {c.tol, c.seed, 0});
        sol = res.solution;
        sys.emplace(FrameSystem::build(st.basis, st.mask));
    } else {
        sys.emplace(FrameSystem::build(st.basis, st.mask));
        AZProblem prob = make_problem(*sys, sys->rhs(detail::as_callable(st.f)));
        rec.K = static_cast<index_t>(prob.sets.K.size());
        rec.L = static_cast<index_t>(prob.sets.L.size());
        rec.Mrows = static_cast<index_t>(prob.sets.Mrows.size());
        const AZOptions opt{c.tol, c.seed, 0};
        if (c.solver == "az") sol = az_solve(prob, opt);
        else if (c.solver == "reduced") sol = reduced_az_solve(prob, opt);
        else if (c.solver == "sparse") sol = sparse_az_solve(prob, opt);
        else if (c.solver == "smoothed")
            sol = smoothed_az_solve(prob, geometric_weights(st.basis.levels, c.weight_factor), detail::parse_variant(c.variant), opt);
        else {
            const auto t0 = std::chrono::steady_clock::now();
            SolveReport rep;
            if (c.solver == "qr") {
                rep = pivoted_qr_solve(dense_A(*sys), prob.b, c.tol);
            } else {
                std::vector<index_t> all(static_cast<std::size_t>(sys->cols()));
                std::iota(all.begin(), all.end(), index_t{0});
                const SparseCM A = SparseCM(sys->scaling().A_hat) * SparseCM(tensor_idwt_rows(all, sys->bank(), st.basis.levels));
                rep = sparse_qr_solve(A, prob.b, c.tol);
            }
            sol.x = rep.x;
            sol.residual = (sys->A(rep.x) - prob.b).norm();
            sol.coef_norm = rep.x.norm();
            sol.plunge_rank = rep.rank;
            sol.scale_norms = scale_norms(rep.x, st.basis.levels);
            const auto ext = exterior_coefficients(*sys);
            sol.exterior_scale_norms = scale_norms(rep.x, st.basis.levels, &ext);
            sol.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    }
    if (rec.K == 0 && c.solver == "adaptive") {
        const auto sets = compute_index_sets(sys->grid(), sys->bank());
        rec.K = static_cast<index_t>(sets.K.size());
        rec.L = static_cast<index_t>(sets.L.size());
        rec.Mrows = static_cast<index_t>(sets.Mrows.size());
    }
    if (sys->grid().touches_box) rec.warnings.push_back("domain touches the boundary of the unit box; periodic basis may wrap");
    rec.N_total = sys->cols();
    rec.M = sys->rows();
    rec.residual = sol.residual;
    rec.coef_norm = sol.coef_norm;
    rec.scale_norms = sol.scale_norms;
    rec.exterior_scale_norms = sol.exterior_scale_norms;
    rec.plunge_rank = sol.plunge_rank;
    rec.timings = sol.timings;
    if (!sol.warning.empty()) rec.warnings.push_back(sol.warning);
    if (coefficients) *coefficients = sol.x;
    if (keep) *keep = std::move(sys);
    return rec;
}

/// Approximant on the full oversampled grid, inside and outside Omega.
inline void write_samples(std::ostream& os, const FrameSystem& sys, const Eigen::VectorXd& x)
{
    const auto& basis = sys.basis();
    const FrameSystem full = FrameSystem::build(basis, full_domain(static_cast<int>(basis.dim())));
    const Eigen::VectorXd v = full.A(x);
    static const char* names[] = {"x", "y", "z"};
    for (std::size_t a = 0; a < basis.dim(); ++a) os << (a < 3 ? names[a] : "t") << ",";
    os << "value,inside\n";
    os << std::setprecision(17);
    for (index_t r = 0; r < full.rows(); ++r) {
        const auto t = full.grid().point(r);
        for (double ti : t) os << ti << ",";
        os << v(r) << "," << (sys.grid().row_of[static_cast<std::size_t>(full.grid().inside[static_cast<std::size_t>(r)])] >= 0 ? 1 : 0)
           << "\n";
    }
}

inline RunRecord cmd_approximate(const RunConfig& c, std::ostream* samples = nullptr)
{
    Eigen::VectorXd x;
    std::optional<FrameSystem> sys;
    RunRecord rec = solve_record(c, c.N, &x, &sys);
    if (samples) write_samples(*samples, *sys, x);
    return rec;
}

inline std::vector<index_t> sweep_sizes(const RunConfig& c)
{
    if (c.sweep.empty()) throw ConfigError("this command needs --sweep with at least one N value");
    return c.sweep;
}

struct ConvergenceResult {
    std::vector<RunRecord> records;
    bool monotone = true;
};

inline ConvergenceResult cmd_convergence(const RunConfig& c, std::ostream& csv)
{
    ConvergenceResult out;
    csv << "N,residual,coefnorm,rank\n" << std::setprecision(17);
    for (auto n : sweep_sizes(c)) {
        RunRecord r = solve_record(c, {n});
        csv << n << "," << r.residual << "," << r.coef_norm << "," << r.plunge_rank << "\n";
        if (!out.records.empty() && !(r.residual < out.records.back().residual)) out.monotone = false;
        out.records.push_back(std::move(r));
    }
    return out;
}

struct TimingRow {
    index_t N = 0;
    index_t N_total = 0;
    std::map<std::string, double> median;
};

struct TimingResult {
    std::vector<TimingRow> rows;
    std::optional<double> slope;  ///< log-log slope of the total time against N_total
};

inline TimingResult cmd_timing(const RunConfig& c, std::ostream& csv)
{
    if (c.repetitions < 3) throw ConfigError("timing needs at least 3 repetitions");
    TimingResult out;
    for (auto n : sweep_sizes(c)) {
        std::map<std::string, std::vector<double>> samples;
        TimingRow row;
        row.N = n;
        for (int rep = 0; rep < c.repetitions; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            RunRecord r = solve_record(c, {n});
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            row.N_total = r.N_total;
            for (const auto& [k, v] : r.timings) samples[k].push_back(v);
            samples["wall"].push_back(wall);
        }
        for (auto& [k, v] : samples) {
            std::sort(v.begin(), v.end());
            row.median[k] = v[v.size() / 2];
        }
        out.rows.push_back(row);
    }
    std::set<std::string> keys;
    for (const auto& r : out.rows)
        for (const auto& [k, v] : r.median) keys.insert(k);
    csv << "N,N_total";
    for (const auto& k : keys) csv << "," << k;
    csv << "\n" << std::setprecision(6);
    for (const auto& r : out.rows) {
        csv << r.N << "," << r.N_total;
        for (const auto& k : keys) csv << "," << (r.median.count(k) ? r.median.at(k) : NAN);
        csv << "\n";
    }
    if (out.rows.size() >= 2) {
        std::vector<double> x, y;
        const std::string key = out.rows.front().median.count("total") ? "total" : "wall";
        for (const auto& r : out.rows) {
            x.push_back(static_cast<double>(r.N_total));
            y.push_back(r.median.at(key));
        }
        out.slope = loglog_slope(x, y);
        csv << "# slope(" << key << " vs N_total) = " << *out.slope << "\n";
    }
    return out;
}

struct IndexSetRow {
    index_t N = 0, N_total = 0, K = 0, L = 0, Mrows = 0;
};

struct IndexSetResult {
    std::vector<IndexSetRow> rows;
    std::map<std::string, double> exponents;  ///< fitted against N_total, only for nonzero counts
};

inline IndexSetResult cmd_indexsets(const RunConfig& c, std::ostream& csv)
{
    IndexSetResult out;
    csv << "N,N_total,K,L,Mrows\n";
    for (auto n : sweep_sizes(c)) {
        const auto st = detail::setup(c, {n});
        const auto grid = masked_grid(st.mask, st.basis.sizes(), st.basis.q);
        const auto sets = compute_index_sets(grid, st.bank);
        IndexSetRow r{n, grid.total_dofs(), static_cast<index_t>(sets.K.size()), static_cast<index_t>(sets.L.size()),
                      static_cast<index_t>(sets.Mrows.size())};
        csv << r.N << "," << r.N_total << "," << r.K << "," << r.L << "," << r.Mrows << "\n";
        out.rows.push_back(r);
    }
    if (out.rows.size() >= 2) {
        auto fit = [&](auto field) -> std::optional<double> {
            std::vector<double> x, y;
            for (const auto& r : out.rows) {
                if (field(r) == 0) return std::nullopt;
                x.push_back(static_cast<double>(r.N_total));
                y.push_back(static_cast<double>(field(r)));
            }
            return loglog_slope(x, y);
        };
        if (auto e = fit([](const IndexSetRow& r) { return r.K; })) out.exponents["K"] = *e;
        if (auto e = fit([](const IndexSetRow& r) { return r.L; })) out.exponents["L"] = *e;
        if (auto e = fit([](const IndexSetRow& r) { return r.Mrows; })) out.exponents["Mrows"] = *e;
        csv << std::setprecision(4);
        for (const auto& [k, v] : out.exponents) csv << "# exponent(" << k << " vs N_total) = " << v << "\n";
    }
    return out;
}

/// m, b_m, b~_m over the union of both supports.
inline void cmd_duals(const RunConfig& c, std::ostream& os)
{
    c.validate();
    const FilterBank bank = parse_family(c.family, c.p, c.p_dual);
    const int q = c.q.front();
    const auto b = sample_primal(bank, q);
    const auto d = minimal_dual(b);
    const index_t lo = std::min(b.first, d.first), hi = std::max(b.last(), d.last());
    if (c.format == "json") {
        json j{{"family", bank.name()}, {"q", q},           {"b_first", b.first}, {"b", b.b},
               {"dual_first", d.first}, {"dual", d.values}, {"dual_norm", d.norm}, {"residual", dual_residual(b, d)}};
        os << j.dump(2) << "\n";
        return;
    }
    os << "m,b,b_dual\n" << std::setprecision(17);
    for (index_t m = lo; m <= hi; ++m) os << m << "," << b.at(m) << "," << d.at(m) << "\n";
}

inline void cmd_filters(const RunConfig& c, std::ostream& os)
{
    c.validate();
    const FilterBank bank = parse_family(c.family, c.p, c.p_dual);
    auto mask_json = [](const Mask& m) { return json{{"offset", m.offset}, {"taps", m.taps}}; };
    const auto rep = validate(bank, 1e-12);
    json checks = json::array();
    for (const auto& ch : rep.checks) checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"violation", ch.violation}});
    json j{{"family", bank.name()},
           {"p", bank.p},
           {"p_dual", bank.p_dual},
           {"h", mask_json(bank.h)},
           {"g", mask_json(bank.g)},
           {"h_dual", mask_json(bank.h_dual)},
           {"g_dual", mask_json(bank.g_dual)},
           {"validation", {{"all_pass", rep.all_pass()}, {"checks", checks}}}};
    os << j.dump(2) << "\n";
}

/// t, phi(t), psi(t) at resolution 2^-levels.
inline void cmd_cascade(const RunConfig& c, std::ostream& os)
{
    c.validate();
    const FilterBank bank = parse_family(c.family, c.p, c.p_dual);
    const auto phi = scaling_at_level(bank.h, c.levels);
    const auto psi = wavelet_at_dyadic(bank, c.levels);
    const index_t lo = std::min(phi.first, psi.first), hi = std::max(phi.last(), psi.last());
    os << "t,phi,psi\n" << std::setprecision(17);
    for (index_t i = lo; i <= hi; ++i) os << std::ldexp(static_cast<double>(i), -c.levels) << "," << phi.at(i) << "," << psi.at(i) << "\n";
}

struct DwtNormRow {
    std::string family;
    double norm_W = 0, norm_W_inv = 0;
};

inline double transform_norm(const TransformPlan& fwd, const TransformPlan& adj, std::uint64_t seed)
{
    const index_t n = fwd.size();
    LinearOperator op{n, n,
                      [&fwd](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
                          y = x;
                          fwd.apply({y.data(), static_cast<std::size_t>(y.size())});
                      },
                      [&adj](const Eigen::VectorXd& y, Eigen::VectorXd& x) {
                          x = y;
                          adj.apply({x.data(), static_cast<std::size_t>(x.size())});
                      }};
    return estimate_norm(op, seed, 200);
}

/// ||W_J||_2 and ||W_J^{-1}||_2 (the latter equals ||W~_J||_2) by power iteration.
inline std::vector<DwtNormRow> dwt_norms(const std::vector<FilterBank>& banks, int J, std::uint64_t seed = 0)
{
    std::vector<DwtNormRow> rows;
    for (const auto& bank : banks) {
        const TransformPlan W(bank, J, Direction::forward, Side::primal), Wt(bank, J, Direction::inverse, Side::dual);
        const TransformPlan Wi(bank, J, Direction::inverse, Side::primal), Wit(bank, J, Direction::forward, Side::dual);
        rows.push_back({bank.name(), transform_norm(W, Wt, seed), transform_norm(Wi, Wit, seed)});
    }
    return rows;
}

inline std::vector<FilterBank> norm_table_families(const RunConfig& c)
{
    if (c.family == "cdf" && c.p == 0) {
        std::vector<FilterBank> v;
        for (auto [p, pd] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {1, 5}, {2, 2}, {2, 4}, {2, 6}, {3, 1}, {3, 3}, {3, 5}, {4, 2}, {4, 4}, {5, 1}, {5, 3}})
            v.push_back(cdf_filter(p, pd));
        return v;
    }
    if (c.family == "db" && c.p == 0) {
        std::vector<FilterBank> v;
        for (int p = 1; p <= 6; ++p) v.push_back(daubechies_filter(p));
        return v;
    }
    return {parse_family(c.family, c.p, c.p_dual)};
}

inline void cmd_dwt_norms(const RunConfig& c, std::ostream& os)
{
    c.validate();
    const auto rows = dwt_norms(norm_table_families(c), c.J, c.seed);
    if (c.format != "json") {
        os << "family,norm_W,norm_W_inv\n" << std::setprecision(6);
        for (const auto& r : rows) os << r.family << "," << r.norm_W << "," << r.norm_W_inv << "\n";
        return;
    }
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"family", r.family}, {"J", c.J}, {"norm_W", r.norm_W}, {"norm_W_inv", r.norm_W_inv}});
    os << j.dump(2) << "\n";
}

inline void write_coefficients(std::ostream& os, const Eigen::VectorXd& x, const std::vector<int>& levels)
{
    const auto scales = coefficient_scales(levels);
    os << "index,scale,value\n" << std::setprecision(17);
    for (index_t i = 0; i < x.size(); ++i) os << i << "," << scales[static_cast<std::size_t>(i)] << "," << x(i) << "\n";
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    return f;
}

/// Runs one subcommand, writing its primary output to `out`.
inline void run_command(const RunConfig& c, std::ostream& out)
{
    c.validate();
    const bool as_json = c.format == "json";
    if (c.command == "approximate") {
        Eigen::VectorXd x;
        std::optional<FrameSystem> sys;
        const RunRecord rec = solve_record(c, c.N, &x, &sys);
        if (!c.samples.empty()) {
            auto f = open_output(c.samples);
            write_samples(f, *sys, x);
        }
        if (!c.coefficients.empty()) {
            auto f = open_output(c.coefficients);
            write_coefficients(f, x, sys->basis().levels);
        }
        out << rec.to_json().dump(2) << "\n";
    } else if (c.command == "convergence") {
        std::ostringstream csv;
        const auto res = cmd_convergence(c, csv);
        if (as_json) {
            json recs = json::array();
            for (const auto& r : res.records) recs.push_back(r.to_json());
            out << json{{"records", recs}, {"monotone", res.monotone}}.dump(2) << "\n";
        } else {
            out << csv.str() << "# monotone = " << (res.monotone ? "true" : "false") << "\n";
        }
    } else if (c.command == "timing") {
        std::ostringstream csv;
        const auto res = cmd_timing(c, csv);
        if (as_json) {
            json rows = json::array();
            for (const auto& r : res.rows) rows.push_back({{"N", r.N}, {"N_total", r.N_total}, {"median", r.median}});
            json j{{"rows", rows}};
            if (res.slope) j["slope"] = *res.slope;
            out << j.dump(2) << "\n";
        } else {
            out << csv.str();
        }
    } else if (c.command == "indexsets") {
        std::ostringstream csv;
        const auto res = cmd_indexsets(c, csv);
        if (as_json) {
            json rows = json::array();
            for (const auto& r : res.rows)
                rows.push_back({{"N", r.N}, {"N_total", r.N_total}, {"K", r.K}, {"L", r.L}, {"Mrows", r.Mrows}});
            out << json{{"rows", rows}, {"exponents", res.exponents}}.dump(2) << "\n";
        } else {
            out << csv.str();
        }
    } else if (c.command == "duals") {
        cmd_duals(c, out);
    } else if (c.command == "filters") {
        cmd_filters(c, out);
    } else if (c.command == "cascade") {
        cmd_cascade(c, out);
    } else {
        cmd_dwt_norms(c, out);
    }
}

} // namespace wavext::cli
