// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "robustqm/dynamic.hpp"
#include "robustqm/eprb.hpp"
#include "robustqm/inference.hpp"
#include "robustqm/rng.hpp"
#include "robustqm/stationary.hpp"
#include "robustqm/stern_gerlach.hpp"

using namespace robustqm;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;
constexpr std::uint64_t big_n = 1'000'000;
const double mc_tol = 4.0 / std::sqrt(double(big_n));

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

eprb::Vec3 random_unit(CounterRng& rng) {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * pi * rng.uniform();
    const double r = std::sqrt(1.0 - z * z);
    return {r * std::cos(phi), r * std::sin(phi), z};
}

Verdict c01() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int k = 0; k <= 12; ++k) {
        const double theta = k * pi / 12.0;
        const auto counts =
            eprb::simulate_pairs(theta, eprb::CorrelationModel::singlet(), big_n, 1000 + k);
        worst = std::max(worst, std::abs(counts.correlation() + std::cos(theta)));
    }
    const double secs = seconds_since(t0);
    return {worst <= mc_tol && secs <= 30.0,
            fmt("max|E12+cos| = %.3e", worst) + fmt(" (tol %.3e)", mc_tol) +
                fmt(", %.2f s (limit 30 s)", secs)};
}

Verdict c02() {
    std::vector<double> grid(2001);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = pi * double(i) / double(grid.size() - 1);
    const auto a = eprb::solve_robust_ode(1.0, pi, grid);
    const auto b = eprb::solve_robust_ode(4.0, 0.0, grid);
    double ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ea = std::max(ea, std::abs(a.e12[i] + std::cos(grid[i])));
        eb = std::max(eb, std::abs(b.e12[i] - std::cos(2.0 * grid[i])));
    }
    return {ea <= 1e-6 && eb <= 1e-6,
            fmt("I=1: sup|E+cos| = %.3e", ea) + fmt(", I=4: sup|E-cos2| = %.3e (tol 1e-6)", eb)};
}

Verdict c03() {
    double worst = 0.0;
    int used = 0;
    for (int k = 0; k < 50; ++k) {
        const double theta = pi * (k + 0.5) / 50.0;
        if (std::abs(std::cos(theta)) > 1.0 - 1e-6) continue;
        const double th[1] = {theta};
        const auto f = inference::fisher_discrete(
            eprb::pair_family(eprb::CorrelationModel::singlet(), theta), th);
        worst = std::max(worst, std::abs(f.matrix(0, 0) - 1.0));
        ++used;
    }
    return {worst <= 1e-6 && used == 50,
            fmt("max|I_F - 1| = %.3e over ", worst) + std::to_string(used) + " angles (tol 1e-6)"};
}

Verdict c04() {
    const double theta = pi / 2.0;
    const auto family = eprb::pair_family(eprb::CorrelationModel::singlet(), theta);
    const double eps[3] = {1e-2, 5e-3, 2.5e-3};
    double rem[3];
    for (int k = 0; k < 3; ++k) {
        const double th[1] = {theta};
        const double e[1] = {eps[k]};
        const auto r = inference::evidence_quadratic(family, th, e, double(big_n));
        rem[k] = std::abs(r.log_evidence - r.quadratic_prediction);
    }
    const double r1 = rem[0] / rem[1], r2 = rem[1] / rem[2];
    const bool ok = r1 >= 6.0 && r1 <= 10.0 && r2 >= 6.0 && r2 <= 10.0;
    return {ok, fmt("remainders %.4e", rem[0]) + fmt(", %.4e", rem[1]) + fmt(", %.4e", rem[2]) +
                    fmt("; ratios %.3f", r1) + fmt(", %.3f (required [6, 10])", r2)};
}

Verdict c05() {
    CounterRng rng(777, 0);
    const auto model = eprb::CorrelationModel::triplet_z0();
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        eprb::RouterSetting s{random_unit(rng), random_unit(rng)};
        const double expect = s.a1[0] * s.a2[0] - s.a1[1] * s.a2[1] + s.a1[2] * s.a2[2];
        worst = std::max(worst, std::abs(eprb::model_correlation(s, model) - expect));
    }
    double mc = 0.0;
    for (int k = 0; k < 3; ++k) {
        eprb::RouterSetting s{random_unit(rng), random_unit(rng)};
        const auto counts = eprb::simulate_pairs(s, model, big_n, 5000 + k);
        mc = std::max(mc, std::abs(counts.correlation() - eprb::model_correlation(s, model)));
    }
    return {worst <= 1e-12 && mc <= mc_tol,
            fmt("closed-form gap %.3e (tol 1e-12)", worst) +
                fmt(", Monte Carlo gap %.3e", mc) + fmt(" (tol %.3e)", mc_tol)};
}

Verdict c06() {
    double fisher = 0.0;
    for (int branch : {1, -1})
        for (int k = 1; k < 50; ++k) {
            const double theta = pi * k / 50.0;
            const double th[1] = {theta};
            const auto f = inference::fisher_discrete(stern_gerlach::sg_family(branch, theta), th);
            fisher = std::max(fisher, std::abs(f.matrix(0, 0) - 1.0));
        }
    double freq = 0.0;
    for (int k = 0; k <= 12; ++k) {
        const double theta = k * pi / 12.0;
        const auto rec =
            stern_gerlach::simulate_sg(stern_gerlach::MagnetSetting::at_angle(theta), big_n, 90 + k);
        const double plus = double(rec["+1"]) / double(big_n);
        const double minus = double(rec["-1"]) / double(big_n);
        freq = std::max({freq, std::abs(plus - (1.0 + std::cos(theta)) / 2.0),
                         std::abs(minus - (1.0 - std::cos(theta)) / 2.0)});
    }
    return {fisher <= 1e-6 && freq <= mc_tol,
            fmt("max|I_F - 1| = %.3e (tol 1e-6)", fisher) +
                fmt(", frequency gap %.3e", freq) + fmt(" (tol %.3e)", mc_tol)};
}

Verdict c07() {
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t violations = 0, checked = 0;
    for (std::uint64_t m : {2u, 3u})
        for (std::uint64_t t = 0; t < 100; ++t) {
            CounterRng rng(2024, (m << 32) | t);
            std::vector<double> p(m);
            double total = 0.0;
            for (auto& x : p) total += (x = 0.01 + rng.uniform());
            for (auto& x : p) x /= total;
            for (std::uint32_t n = 1; n <= 12; ++n) {
                const auto r = inference::appendix_a_suite(p, n);
                for (const auto& mx : r.maximizers) {
                    ++checked;
                    if (!mx.holds) ++violations;
                }
            }
        }
    const double secs = seconds_since(t0);
    return {violations == 0 && secs <= 10.0,
            std::to_string(checked) + " maximizers, " + std::to_string(violations) +
                " violations" + fmt(", %.2f s (limit 10 s)", secs)};
}

Verdict c08() {
    const auto g = Grid1D::over(-10.0, 10.0, 1001);
    const auto ho = stationary::solve_eigen(
        stationary::StationaryProblem::with_units(stationary::harmonic_potential(g), 0.0), g, 2);
    const double e0 = std::abs(ho[0].energy - 0.5), e1 = std::abs(ho[1].energy - 1.5);
    const auto w = Grid1D::over(0.0, 1.0, 1001);
    const auto well = stationary::solve_eigen(
        stationary::StationaryProblem::with_units(stationary::zero_potential(w), 0.0), w, 3);
    double rel = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const double exact = n * n * pi * pi / 2.0;
        rel = std::max(rel, std::abs(well[n - 1].energy - exact) / exact);
    }
    return {e0 <= 1e-4 && e1 <= 1e-3 && rel <= 1e-3,
            fmt("|E0-0.5| = %.3e", e0) + fmt(", |E1-1.5| = %.3e", e1) +
                fmt(", well max rel err %.3e (tol 1e-3)", rel)};
}

double f_q_gap(double h) {
    const double L = 12.0;
    const auto g = Grid1D::over(-L, L, static_cast<std::size_t>(std::llround(2 * L / h)) + 1);
    const auto psi = gaussian_packet(g, 0.0, 1.0, 1.5);
    const auto problem =
        stationary::StationaryProblem::with_units(stationary::harmonic_potential(g), 0.5);
    const auto split = stationary::madelung_split(psi, problem.lambda);
    return std::abs(stationary::functional_F(split.density, split.action, problem) -
                    stationary::functional_Q(psi, problem));
}

Verdict c09() {
    const double a = f_q_gap(0.04), b = f_q_gap(0.02), c = f_q_gap(0.01);
    const double r1 = a / b, r2 = b / c;
    return {r1 >= 3.5 && r1 <= 4.5 && r2 >= 3.5 && r2 <= 4.5,
            fmt("|F-Q| = %.4e", a) + fmt(", %.4e", b) + fmt(", %.4e", c) +
                fmt("; ratios %.3f", r1) + fmt(", %.3f (required [3.5, 4.5])", r2)};
}

Verdict c10() {
    const auto g = Grid1D::over(-10.0, 10.0, 1001);
    auto problem = stationary::StationaryProblem::with_units(stationary::harmonic_potential(g), 0.0);
    const auto ground = stationary::solve_eigen(problem, g, 1).front();
    problem.energy = ground.energy;
    const auto flat = ScalarField::sample(g, [](double) { return 1.0; }, FieldKind::density);
    const auto zero = ScalarField::sample(g, [](double) { return 0.0; }, FieldKind::action);
    const auto r = stationary::minimize_F_direct(problem, g, flat, zero);
    const auto ref = ground.state.density();
    double sup = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        sup = std::max(sup, std::abs(r.density.values[i] - ref[i]));

    // gradient against central finite differences at 20 interior nodes
    auto P = ScalarField::sample(g, [](double x) { return gaussian_density(x, 0.3, 1.2); },
                                 FieldKind::density);
    P.values.front() = P.values.back() = 0.0;
    const auto S = ScalarField::sample(g, [](double x) { return 0.4 * std::sin(x) + 0.1 * x; },
                                       FieldKind::action);
    const auto grad = stationary::functional_F_gradient(P, S, problem);
    CounterRng rng(31, 0);
    double worst = 0.0;
    int checked = 0;
    while (checked < 20) {
        const auto i = 1 + static_cast<std::size_t>(rng.uniform() * double(g.n_points - 2));
        if (P.values[i] <= 1e-3) continue;
        ++checked;
        const double dp = 1e-4 * P.values[i];
        auto up = P, dn = P;
        up.values[i] += dp;
        dn.values[i] -= dp;
        const double fd_p = (stationary::functional_F(up, S, problem) -
                             stationary::functional_F(dn, S, problem)) / (2.0 * dp);
        const double ds = 1e-4;
        auto su = S, sd = S;
        su.values[i] += ds;
        sd.values[i] -= ds;
        const double fd_s = (stationary::functional_F(P, su, problem) -
                             stationary::functional_F(P, sd, problem)) / (2.0 * ds);
        worst = std::max({worst, std::abs(fd_p - grad.density[i]) / std::abs(grad.density[i]),
                          std::abs(fd_s - grad.action[i]) / std::abs(grad.action[i])});
    }
    const bool ok = sup <= 1e-3 && std::abs(r.F_value) <= 1e-2 && worst <= 1e-6;
    return {ok, fmt("sup density gap %.3e", sup) + fmt(", F = %.3e", r.F_value) +
                    fmt(", %.0f iterations", double(r.iterations)) +
                    fmt(", gradient rel err %.3e (tol 1e-6)", worst)};
}

Verdict c11() {
    const auto g = Grid1D::over(-10.0, 10.0, 1001);
    auto problem = stationary::StationaryProblem::with_units(stationary::harmonic_potential(g), 0.0);
    const auto ground = stationary::solve_eigen(problem, g, 1).front();
    problem.energy = ground.energy;
    const auto split = stationary::madelung_split(ground.state, problem.lambda);
    const double res = stationary::hje_residual(split.density, split.action, problem);
    const double target = -stationary::continuum_fisher(split.density) / problem.lambda;
    const double rel = std::abs(res - target) / std::abs(target);
    return {rel <= 1e-4, fmt("residual %.10f", res) + fmt(" vs -I_F/lambda %.10f", target) +
                             fmt(", rel %.3e (tol 1e-4)", rel)};
}

Verdict c12() {
    const auto g = Grid1D::over(-20.0, 20.0, 2001);
    dynamic::PropagatorConfig cfg;
    cfg.grid = g;
    cfg.dt = 1e-3;
    cfg.t_final = 2.0;
    cfg.sample_stride = 50;
    const auto run = dynamic::propagate(gaussian_packet(g, 0.0, 1.0, 0.0),
                                        dynamic::GaugeField::free(), cfg);
    double width = 0.0, drift = 0.0;
    for (std::size_t k = 0; k < run.trace.size(); ++k) {
        const double t = run.trace.times[k];
        const double exact = std::sqrt(1.0 + t * t / 4.0);
        width = std::max(width, std::abs(run.trace.width[k] / exact - 1.0));
        drift = std::max(drift, std::abs(run.trace.norm[k] - run.trace.norm[0]));
    }
    return {width <= 1e-3 && drift <= 1e-10,
            fmt("max width rel err %.3e (tol 1e-3)", width) +
                fmt(", norm drift %.3e (tol 1e-10)", drift)};
}

Verdict c13() {
    const dynamic::SpaceTimeFn chi = [](double x, double t) { return x * std::sin(t); };
    double dens[3], wave[3];
    for (int level = 0; level < 3; ++level) {
        const double scale = std::ldexp(1.0, -level);
        const double h = 0.02 * scale;
        const auto g = Grid1D::over(-20.0, 20.0, static_cast<std::size_t>(std::llround(40.0 / h)) + 1);
        dynamic::PropagatorConfig cfg;
        cfg.grid = g;
        cfg.dt = 2e-3 * scale;
        cfg.t_final = 1.0;
        const auto gap = dynamic::gauge_covariance_gap(gaussian_packet(g, 0.0, 1.0, 0.0),
                                                       dynamic::GaugeField::free(), chi, cfg);
        dens[level] = gap.density_gap;
        wave[level] = gap.wave_gap;
    }
    const double r1 = wave[0] / wave[1], r2 = wave[1] / wave[2];
    const bool ok = dens[1] <= 1e-8 && r1 >= 3.5 && r1 <= 4.5 && r2 >= 3.5 && r2 <= 4.5;
    return {ok, fmt("density gap at dt=1e-3,h=0.01 over t in [0,1]: %.3e (tol 1e-8)", dens[1]) +
                    fmt("; wave gaps %.3e", wave[0]) + fmt(", %.3e", wave[1]) +
                    fmt(", %.3e", wave[2]) + fmt("; ratios %.3f", r1) + fmt(", %.3f", r2)};
}

Verdict c14() {
    double worst = 0.0;
    auto check = [&](const WaveField& psi0, const dynamic::GaugeField& f,
                     const dynamic::PropagatorConfig& cfg) {
        const auto run = dynamic::propagate(psi0, f, cfg);
        for (std::size_t k = 0; k < run.trace.size(); ++k) {
            const double target = -cfg.hbar * cfg.hbar / (8.0 * cfg.mass) * run.trace.fisher_spatial[k];
            worst = std::max(worst, std::abs(run.trace.hje_residual[k] - target) / std::abs(target));
        }
    };
    {
        const auto g = Grid1D::over(-10.0, 10.0, 1001);
        const auto ground = stationary::solve_eigen(
            stationary::StationaryProblem::with_units(stationary::harmonic_potential(g), 0.0), g, 1);
        dynamic::PropagatorConfig cfg;
        cfg.grid = g;
        cfg.t_final = 2.0;
        cfg.sample_stride = 100;
        check(ground.front().state,
              dynamic::GaugeField::static_potential([](double x) { return 0.5 * x * x; }), cfg);
    }
    {
        const auto g = Grid1D::over(-20.0, 20.0, 2001);
        dynamic::PropagatorConfig cfg;
        cfg.grid = g;
        cfg.t_final = 2.0;
        cfg.sample_stride = 100;
        check(gaussian_packet(g, 0.0, 1.0, 1.0), dynamic::GaugeField::free(), cfg);
    }
    return {worst <= 1e-3, fmt("max rel gap to -(hbar^2/8m) I_F: %.3e (tol 1e-3)", worst)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict c15() {
    const fs::path root = fs::temp_directory_path() / ("robustqm_accept_" + std::to_string(::getpid()));
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> configs{
        {"eprb-scan", R"({"experiment":"eprb-scan","seed":42,"parameters":{"N":20000}})"},
        {"eprb-simulate",
         R"({"experiment":"eprb-simulate","seed":7,"parameters":{"theta":1.0,"N":100000}})"},
        {"sg-scan", R"({"experiment":"sg-scan","seed":9,"parameters":{"N":20000,"steps":16}})"},
        {"appendix-a", R"({"experiment":"appendix-a","seed":3,"parameters":{"tables":5,"N_max":6}})"}};
    int identical = 0, files = 0;
    std::string detail;
    for (const auto& [name, text] : configs) {
        const fs::path cfg = root / (name + ".json");
        std::ofstream(cfg) << text;
        std::string outs[2];
        for (int run = 0; run < 2; ++run) {
            outs[run] = (root / (name + "_" + std::to_string(run))).string();
            // different worker counts on the two runs
            const std::string cmd = std::string("ROBUSTQM_THREADS=") + (run ? "3" : "1") + " " +
                                    ROBUSTQM_TOOL + " run --config " + cfg.string() +
                                    " --output-dir " + outs[run] + " > /dev/null";
            if (std::system(cmd.c_str()) != 0) detail += name + " run failed; ";
        }
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            const auto other = fs::path(outs[1]) / entry.path().filename();
            if (fs::exists(other) && slurp(entry.path()) == slurp(other)) ++identical;
        }
    }
    fs::remove_all(root);
    return {files > 0 && identical == files && detail.empty(),
            detail + std::to_string(identical) + "/" + std::to_string(files) +
                " CSV files byte-identical across repeated runs"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"01 eprb singlet reproduction", c01},
        {"02 robustness ode", c02},
        {"03 constant fisher", c03},
        {"04 evidence cubic remainder", c04},
        {"05 triplet variant", c05},
        {"06 stern-gerlach", c06},
        {"07 frequency bounds", c07},
        {"08 tise spectrum", c08},
        {"09 f/q equivalence", c09},
        {"10 nonlinear vs linear", c10},
        {"11 stationary residual identity", c11},
        {"12 tdse free packet", c12},
        {"13 gauge covariance", c13},
        {"14 dynamic residual identity", c14},
        {"15 determinism", c15},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
