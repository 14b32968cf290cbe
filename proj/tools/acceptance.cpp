// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "wavext.hpp"
#include "wavext/cli.hpp"

using namespace wavext;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    bool warn = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// db1..db10, CDF pairs with p <= p_dual and p + p_dual <= 12, plus the three
// pairs with p_dual < p that the dual tests use.
std::vector<FilterBank> shipped_banks()
{
    std::vector<FilterBank> v;
    for (int p = 1; p <= 10; ++p) v.push_back(daubechies_filter(p));
    for (int p = 1; p <= 6; ++p)
        for (int pd = p; p + pd <= 12; pd += 2) v.push_back(cdf_filter(p, pd));
    for (auto [p, pd] : {std::pair{3, 1}, std::pair{4, 2}, std::pair{5, 1}}) v.push_back(cdf_filter(p, pd));
    return v;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) { return cli::loglog_slope(x, y); }

const auto exp_x = [](std::span<const double> t) { return std::exp(t[0]); };
const auto exp_xy = [](std::span<const double> t) { return std::exp(t[0] * t[1]); };

FrameSystem disk_system(const FilterBank& bank, index_t n, int q)
{
    return FrameSystem::build(make_basis(bank, {n, n}, {q, q}), ball_domain({0.5, 0.5}, 0.35));
}

FrameSystem interval_system(const FilterBank& bank, index_t N, double b = 0.5)
{
    return FrameSystem::build(make_basis(bank, {N}, {2}), interval_domain(0.0, b));
}

// --- 1 ---------------------------------------------------------------------------

Outcome filter_validity()
{
    const auto t0 = Clock::now();
    double worst = 0;
    std::string bad;
    const auto banks = shipped_banks();
    for (const auto& bank : banks) {
        const auto rep = validate(bank, 1e-12);
        const double v = rep.find("double_shift")->violation;
        worst = std::max(worst, v);
        if (!rep.all_pass()) bad += bank.name() + " ";
    }
    const double t = seconds_since(t0);
    return {bad.empty() && worst < 1e-12 && t < 1.0, false,
            fmt("%zu banks, max double-shift violation %.1e, %.3f s%s", banks.size(), worst, t, bad.empty() ? "" : (" failing: " + bad).c_str())};
}

// --- 2 ---------------------------------------------------------------------------

Outcome transform_correctness()
{
    const auto t0 = Clock::now();
    double pr = 0, ident = 0;
    std::string bad;
    for (const auto& bank : shipped_banks()) {
        double worst = 0;
        for (std::size_t n : {std::size_t{16}, std::size_t{1024}, std::size_t{1} << 16}) {
            const auto x = random_vector(n, n + 1);
            const auto a = idwt(dwt(x, bank), bank), b = dual_idwt(dual_dwt(x, bank), bank);
            for (std::size_t i = 0; i < n; ++i) worst = std::max({worst, std::abs(a[i] - x[i]), std::abs(b[i] - x[i])});
        }
        if (worst >= 1e-10) bad += fmt(" %s (%.1e)", bank.name().c_str(), worst);
        pr = std::max(pr, worst);
        for (int J : {1, 4, 8}) {
            const auto W = TransformPlan(bank, J, Direction::forward, Side::primal).dense();
            const auto Wi = TransformPlan(bank, J, Direction::inverse, Side::primal).dense();
            const auto Wd = TransformPlan(bank, J, Direction::forward, Side::dual).dense();
            const auto Wdi = TransformPlan(bank, J, Direction::inverse, Side::dual).dense();
            ident = std::max({ident, (W.transpose() - Wdi).cwiseAbs().maxCoeff(), (Wi.transpose() - Wd).cwiseAbs().maxCoeff()});
        }
    }
    const double t = seconds_since(t0);
    return {pr < 1e-10 && ident < 1e-12 && t < 30, false,
            fmt("reconstruction error %.1e (N up to 2^16), adjoint identities %.1e (J <= 8), %.1f s%s", pr, ident, t,
                bad.empty() ? "" : ("; over tolerance:" + bad).c_str())};
}

// --- 3 ---------------------------------------------------------------------------

Outcome transform_structure()
{
    std::vector<double> Js, per_col, ratio;
    for (int J = 6; J <= 12; ++J) {
        const auto W = TransformPlan(daubechies_filter(2), J, Direction::forward, Side::primal).dense();
        index_t worst = 0, total = 0;
        for (index_t c = 0; c < W.cols(); ++c) {
            const index_t nz = (W.col(c).array() != 0.0).count();
            worst = std::max(worst, nz);
            total += nz;
        }
        Js.push_back(J);
        per_col.push_back(static_cast<double>(worst));
        ratio.push_back(static_cast<double>(total) / (J * std::ldexp(1.0, J)));
    }
    const double e = slope(Js, per_col);
    const double rmin = *std::min_element(ratio.begin(), ratio.end()), rmax = *std::max_element(ratio.begin(), ratio.end());
    return {e >= 0.8 && e <= 1.2 && rmax <= 2 * rmin, false,
            fmt("db2: max nnz per column %g..%g over J = 6..12, exponent %.3f; nnz/(J 2^J) in [%.3f, %.3f]", per_col.front(), per_col.back(), e,
                rmin, rmax)};
}

// --- 4 ---------------------------------------------------------------------------

Outcome discrete_duals()
{
    const auto t0 = Clock::now();
    const std::vector<FilterBank> banks{daubechies_filter(2), daubechies_filter(3), daubechies_filter(4),
                                        cdf_filter(2, 2),     cdf_filter(3, 1),     cdf_filter(3, 3),
                                        cdf_filter(3, 5),     cdf_filter(4, 2),     cdf_filter(5, 1)};
    double res = 0, gram = 0, repro = 0;
    for (const auto& bank : banks)
        for (int q : {2, 4}) {
            const auto b = sample_primal(bank, q);
            const auto d = minimal_dual(b);
            res = std::max(res, dual_residual(b, d));
            const index_t N = 64;
            const auto P = periodize_primal(b, N);
            const auto D = periodize_dual(d, N, q);
            const index_t len = N * q;
            for (index_t k = 0; k < N; ++k)
                for (index_t l = 0; l < N; ++l) {
                    double s = 0;
                    for (index_t m = 0; m < len; ++m)
                        s += P[static_cast<std::size_t>(pmod(m - k * q, len))] * D[static_cast<std::size_t>(pmod(m - l * q, len))];
                    gram = std::max(gram, std::abs(s - (k == l ? 1.0 : 0.0)));
                }
            // quasi-interpolation on the full box reproduces span Phi_N
            const auto sys = FrameSystem(make_basis(bank, {N}, {q}), masked_grid(full_domain(1), {N}, {q}));
            const auto c = random_vector(static_cast<std::size_t>(N), 3);
            const Eigen::Map<const Eigen::VectorXd> cv(c.data(), N);
            const Eigen::VectorXd f = sys.scaling().A_hat * cv;
            const Eigen::VectorXd back = sys.scaling().Z_hat.transpose() * f;
            repro = std::max(repro, (back - cv).cwiseAbs().maxCoeff());
        }
    const double t = seconds_since(t0);
    return {res < 1e-10 && gram < 1e-10 && repro < 1e-10 && t < 10, false,
            fmt("9 families x q in {2,4}: dual residual %.1e, Gram %.1e, reproduction %.1e, %.2f s", res, gram, repro, t)};
}

// --- 5 ---------------------------------------------------------------------------

Outcome plunge_structure()
{
    const auto t0 = Clock::now();
    bool ok = true;
    std::string notes;
    // dense checks at N <= 2^10
    struct Case {
        std::string name;
        FrameSystem sys;
    };
    std::vector<Case> cases;
    for (index_t N : {64, 256, 1024}) cases.push_back({fmt("db2 N=%lld", static_cast<long long>(N)), interval_system(daubechies_filter(2), N)});
    cases.push_back({"cdf33 disk 32x32", disk_system(cdf_filter(3, 3), 32, 2)});
    std::vector<double> nnz_ratio;
    for (const auto& c : cases) {
        const auto sets = compute_index_sets(c.sys.grid(), c.sys.bank());
        const Eigen::MatrixXd P = dense_plunge(c.sys);
        const double cut = 1e-12 * (dense_A(c.sys).cwiseAbs().maxCoeff());
        std::vector<char> colL(static_cast<std::size_t>(P.cols()), 0), rowM(static_cast<std::size_t>(P.rows()), 0);
        for (auto l : sets.L) colL[static_cast<std::size_t>(l)] = 1;
        for (auto r : sets.Mrows) rowM[static_cast<std::size_t>(r)] = 1;
        index_t nnz = 0;
        bool contained = true;
        for (index_t j = 0; j < P.cols(); ++j)
            for (index_t i = 0; i < P.rows(); ++i)
                if (std::abs(P(i, j)) > cut) {
                    ++nnz;
                    if (!colL[static_cast<std::size_t>(j)] || !rowM[static_cast<std::size_t>(i)]) contained = false;
                }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(P);
        const auto& s = svd.singularValues();
        const double anorm = operator_norm(c.sys);
        const index_t rank = (s.array() > default_tol * anorm).count();
        const int J = c.sys.basis().levels[0];
        nnz_ratio.push_back(static_cast<double>(nnz) / (J * static_cast<double>(sets.K.size())));
        const bool good = contained && rank <= static_cast<index_t>(sets.K.size());
        ok = ok && good;
        notes += fmt("%s: rank %lld <= #K %zu, nnz %lld%s; ", c.name.c_str(), static_cast<long long>(rank), sets.K.size(),
                     static_cast<long long>(nnz), contained ? "" : " NOT CONTAINED");
    }
    const double rmax = *std::max_element(nnz_ratio.begin(), nnz_ratio.begin() + 3);
    const double rmin = *std::min_element(nnz_ratio.begin(), nnz_ratio.begin() + 3);
    const bool nnz_ok = rmax <= 2 * rmin;
    notes += fmt("nnz/(J #K) 1-D in [%.2f, %.2f]; ", rmin, rmax);

    // 1-D rank constant across N = 2^6..2^12
    std::vector<index_t> ranks1;
    for (index_t N = 64; N <= 4096; N *= 2) ranks1.push_back(plunge_rank(interval_system(daubechies_filter(2), N), default_tol, 0, 0).randomized);
    const bool const_ok = std::all_of(ranks1.begin(), ranks1.end(), [&](index_t r) { return r == ranks1.front(); });
    notes += fmt("1-D rank %lld for all N in 2^6..2^12%s; ", static_cast<long long>(ranks1.front()), const_ok ? "" : " (varies)");

    // 2-D growth
    std::vector<double> dofs, r2;
    for (index_t n : {16, 32, 64}) {
        const auto sys = disk_system(cdf_filter(3, 3), n, 4);
        dofs.push_back(static_cast<double>(sys.cols()));
        r2.push_back(static_cast<double>(plunge_rank(sys, default_tol, 0, 0).randomized));
    }
    const double e = slope(dofs, r2);
    const bool grow_ok = std::abs(e - 0.5) <= 0.15;
    notes += fmt("2-D disk ranks %g/%g/%g, exponent %.3f", r2[0], r2[1], r2[2], e);
    const double t = seconds_since(t0);
    notes += fmt(", %.1f s", t);
    return {ok && nnz_ok && const_ok && grow_ok && t < 300, false, notes};
}

// --- 6 ---------------------------------------------------------------------------

Outcome pipeline_parity()
{
    const auto t0 = Clock::now();
    bool ok = true;
    std::string notes;
    auto check = [&](const char* name, const FrameSystem& sys, const Eigen::VectorXd& b) {
        const auto prob = make_problem(sys, b);
        const double van = az_solve(prob).residual, red = reduced_az_solve(prob).residual, spa = sparse_az_solve(prob).residual;
        const auto A = dense_A(sys);
        const double qr = pivoted_qr_solve(A, b).residual, svd = truncated_svd_solve(A, b).residual;
        const double lo = std::min({van, red, spa, qr, svd}), hi = std::max({van, red, spa, qr, svd});
        ok = ok && hi <= 10 * lo;
        notes += fmt("%s az %.2e reduced %.2e sparse %.2e qr %.2e svd %.2e (spread %.1fx); ", name, van, red, spa, qr, svd, hi / lo);
    };
    {
        const auto sys = interval_system(cdf_filter(3, 3), 256);
        check("1-D cdf33 N=256:", sys, sys.rhs(exp_x));
    }
    {
        const auto sys = disk_system(cdf_filter(3, 3), 32, 4);
        check("2-D cdf33 disk 32x32:", sys, sys.rhs(exp_xy));
    }
    const double t = seconds_since(t0);
    notes += fmt("%.1f s", t);
    return {ok && t < 300, false, notes};
}

// --- 7 ---------------------------------------------------------------------------

Outcome convergence()
{
    const auto t0 = Clock::now();
    bool ok = true;
    std::string notes;
    std::vector<double> last;
    for (auto [p, pd] : std::vector<std::pair<int, int>>{{2, 2}, {3, 3}, {4, 4}}) {
        const auto bank = cdf_filter(p, pd);
        std::vector<double> res;
        for (index_t n : {16, 32, 64}) {
            const auto sys = disk_system(bank, n, 4);
            res.push_back(reduced_az_solve(make_problem(sys, sys.rhs(exp_xy))).residual);
        }
        const bool mono = res[1] < res[0] && res[2] < res[1];
        ok = ok && mono;
        last.push_back(res.back());
        notes += fmt("%s %.2e/%.2e/%.2e%s; ", bank.name().c_str(), res[0], res[1], res[2], mono ? "" : " NOT MONOTONE");
    }
    const bool order = last[2] < last[1] && last[2] < last[0];
    const double t = seconds_since(t0);
    notes += fmt("highest order smallest at N=64: %s, %.1f s", order ? "yes" : "no", t);
    return {ok && order && t < 600, false, notes};
}

// --- 8 ---------------------------------------------------------------------------

double median_time(const std::function<double()>& run, int reps = 3)
{
    std::vector<double> t;
    for (int i = 0; i < reps; ++i) t.push_back(run());
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

Outcome complexity_slopes()
{
    std::string notes;
    bool pass = true, warn = false;
    const auto bank = cdf_filter(3, 3);
    std::vector<double> Ns;
    std::map<Variant, std::vector<double>> times;
    for (int J = 10; J <= 18; J += 2) {
        const index_t N = index_t{1} << J;
        const auto sys = interval_system(bank, N);
        const auto prob = make_problem(sys, sys.rhs(exp_x));
        Ns.push_back(static_cast<double>(N));
        for (auto v : {Variant::vanilla, Variant::reduced, Variant::sparse})
            times[v].push_back(median_time([&] { return az_pipeline(prob, v).timings.at("total"); }));
    }
    for (auto& [v, t] : times) {
        const double s = slope(Ns, t);
        if (s < 0.8 - 0.3 || s > 1.4 + 0.3) pass = false;
        else if (s < 0.8 || s > 1.4) warn = true;
        notes += fmt("1-D %s slope %.2f (%.3f s at 2^18); ", variant_name(v), s, t.back());
    }
    notes += fmt("sparse %s vanilla at 2^16; ", times[Variant::sparse][3] <= times[Variant::vanilla][3] ? "<=" : ">");

    std::vector<double> dofs, t2;
    for (index_t n : {16, 32, 64, 128}) {
        const auto sys = disk_system(bank, n, 4);
        const auto prob = make_problem(sys, sys.rhs(exp_xy));
        dofs.push_back(static_cast<double>(sys.cols()));
        t2.push_back(median_time([&] { return reduced_az_solve(prob).timings.at("total"); }));
    }
    const double s2 = slope(dofs, t2);
    if (s2 > 1.8 + 0.3) pass = false;
    else if (s2 > 1.8) warn = true;
    notes += fmt("2-D reduced slope %.2f over 2^8..2^14 DOF (%.2f s at 2^14)", s2, t2.back());
    return {pass, warn, notes};
}

// --- 9 ---------------------------------------------------------------------------

Outcome smoothing()
{
    const auto t0 = Clock::now();
    const auto basis = make_basis(cdf_filter(3, 3), {256}, {2});
    const auto mask = interval_domain(0.0, 0.6);
    const auto adaptive = adaptive_weighted_solve(basis, mask, exp_x, Variant::reduced);
    const auto sys = FrameSystem::build(basis, mask);
    const auto plain = reduced_az_solve(make_problem(sys, sys.rhs(exp_x)));
    const auto& a = adaptive.solution.exterior_scale_norms;
    const auto& p = plain.exterior_scale_norms;
    const std::size_t n = a.size();
    const bool a_dec = a[n - 3] > a[n - 2] && a[n - 2] > a[n - 1];
    const bool p_dec = p[n - 3] > p[n - 2] && p[n - 2] > p[n - 1];
    const double ra = adaptive.solution.residual, rp = plain.residual;
    const bool close = std::max(ra, rp) <= 10 * std::min(ra, rp);
    const double t = seconds_since(t0);
    return {a_dec && !p_dec && close && t < 60, false,
            fmt("extension norms, three finest scales: adaptive %.2e/%.2e/%.2e, unweighted %.2e/%.2e/%.2e; residuals %.2e vs %.2e; %.2f s",
                a[n - 3], a[n - 2], a[n - 1], p[n - 3], p[n - 2], p[n - 1], ra, rp, t)};
}

// --- 10 --------------------------------------------------------------------------

Outcome determinism()
{
    std::vector<cli::RunConfig> configs;
    cli::RunConfig c;
    c.seed = 20;
    for (const char* s : {"az", "reduced", "sparse", "adaptive"}) {
        c.solver = s;
        configs.push_back(c);
    }
    c.family = "cdf33";
    c.domain = "disk:0.5,0.5,0.35";
    c.function = "exp2d";
    c.N = {32};
    c.q = {4};
    for (const char* s : {"az", "reduced", "sparse"}) {
        c.solver = s;
        configs.push_back(c);
    }
    bool same = true;
    for (const auto& cfg : configs) {
        const auto a = cli::cmd_approximate(cfg), b = cli::cmd_approximate(cfg);
        same = same && a.residual == b.residual && a.coef_norm == b.coef_norm;
    }
    return {same, false, fmt("%zu configurations run twice: residual and coefficient norm %s", configs.size(), same ? "bit-identical" : "DIFFER")};
}

} // namespace

// --known-failures=2,5 keeps the exit status at zero when exactly those
// criteria fail; the FAIL lines are printed regardless.
int main(int argc, char** argv)
{
    std::set<std::size_t> known;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i], key = "--known-failures=";
        if (a.rfind(key, 0) != 0) {
            std::fprintf(stderr, "usage: acceptance [--known-failures=N[,N...]]\n");
            return 2;
        }
        std::stringstream ss(a.substr(key.size()));
        for (std::string tok; std::getline(ss, tok, ',');) known.insert(std::stoul(tok));
    }
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"filter validity", filter_validity},
        {"transform correctness", transform_correctness},
        {"transform sparsity structure", transform_structure},
        {"discrete duals", discrete_duals},
        {"plunge structure", plunge_structure},
        {"pipeline parity", pipeline_parity},
        {"convergence", convergence},
        {"complexity slopes", complexity_slopes},
        {"smoothing", smoothing},
        {"determinism", determinism},
    };
    int failed = 0;
    std::set<std::size_t> failing;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) {
            ++failed;
            failing.insert(i + 1);
        }
        std::printf("criterion %2zu %s %s: %s\n", i + 1, o.pass ? (o.warn ? "PASS(warn)" : "PASS") : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    if (!known.empty() && failing == known) {
        std::printf("all failures are listed as known\n");
        return 0;
    }
    return failed;
}
