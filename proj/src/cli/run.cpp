#include "robustqm/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "robustqm/cli/csv.hpp"
#include "robustqm/dynamic.hpp"
#include "robustqm/eprb.hpp"
#include "robustqm/errors.hpp"
#include "robustqm/inference.hpp"
#include "robustqm/rng.hpp"
#include "robustqm/stationary.hpp"
#include "robustqm/stern_gerlach.hpp"

namespace robustqm::cli {

namespace fs = std::filesystem;

namespace {

struct Output {
    std::string name;
    std::vector<Column> columns;
};

double num(const Json& p, const char* key) { return p.at(key).get<double>(); }
std::int64_t integer(const Json& p, const char* key) { return p.at(key).get<std::int64_t>(); }

std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + (index + 1) * CounterRng::golden_gamma);
}

std::vector<double> linspace(double a, double b, std::int64_t steps) {
    std::vector<double> v(static_cast<std::size_t>(steps) + 1);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(steps);
    return v;
}

double n_sigma(double estimate, double model, double sigma) {
    const double diff = estimate - model;
    if (sigma > 0.0) return diff / sigma;
    return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

eprb::CorrelationModel model_of(const Json& p) {
    const auto kind = p.at("model").get<std::string>();
    if (kind == "singlet") return eprb::CorrelationModel::singlet();
    if (kind == "triplet_z0") return eprb::CorrelationModel::triplet_z0();
    auto m = eprb::CorrelationModel::general(static_cast<int>(integer(p, "K")), num(p, "phi"));
    m.validate();
    return m;
}

std::vector<Output> eprb_scan(const RunConfig& c) {
    const auto& p = c.parameters;
    const auto model = model_of(p);
    const auto n = static_cast<std::uint64_t>(integer(p, "N"));
    Column theta{"theta", linspace(num(p, "theta_min"), num(p, "theta_max"), integer(p, "steps"))};
    Column e_model{"E12_model", {}}, e_sim{"E12_sim", {}}, sig{"n_sigma", {}};
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        const double t = theta.values[k];
        const double e = model.correlation(t);
        const double s = eprb::simulate_pairs(t, model, n, point_seed(*c.seed, k)).correlation();
        e_model.values.push_back(e);
        e_sim.values.push_back(s);
        sig.values.push_back(n_sigma(s, e, std::sqrt(std::max(0.0, 1.0 - e * e) / double(n))));
    }
    return {{"scan.csv", {theta, e_model, e_sim, sig}}};
}

std::vector<Output> eprb_simulate(const RunConfig& c) {
    const auto& p = c.parameters;
    const auto model = model_of(p);
    const double t = num(p, "theta");
    const auto counts =
        eprb::simulate_pairs(t, model, static_cast<std::uint64_t>(integer(p, "N")), *c.seed);
    auto one = [](const char* name, double v) { return Column{name, {v}}; };
    return {{"counts.csv",
             {one("theta", t), one("n_pp", double(counts.n_pp)), one("n_pm", double(counts.n_pm)),
              one("n_mp", double(counts.n_mp)), one("n_mm", double(counts.n_mm)),
              one("mean_x", counts.mean_x()), one("mean_y", counts.mean_y()),
              one("E12_sim", counts.correlation()), one("E12_model", model.correlation(t))}}};
}

std::vector<Output> sg_scan(const RunConfig& c) {
    const auto& p = c.parameters;
    const int branch = static_cast<int>(integer(p, "branch"));
    const auto n = static_cast<std::uint64_t>(integer(p, "N"));
    Column theta{"theta", linspace(num(p, "theta_min"), num(p, "theta_max"), integer(p, "steps"))};
    Column model{"p_plus_model", {}}, sim{"p_plus_sim", {}}, sig{"n_sigma", {}},
        fisher{"fisher", {}};
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        const double t = theta.values[k];
        const auto setting = stern_gerlach::MagnetSetting::at_angle(t, branch);
        const double pp = stern_gerlach::sg_table(setting).prob[0];
        const auto rec = stern_gerlach::simulate_sg(setting, n, point_seed(*c.seed, k));
        const double f = double(rec["+1"]) / double(n);
        model.values.push_back(pp);
        sim.values.push_back(f);
        sig.values.push_back(n_sigma(f, pp, std::sqrt(pp * (1.0 - pp) / double(n))));
        double info = std::numeric_limits<double>::quiet_NaN();
        try {
            const double th[1] = {t};
            info = inference::fisher_discrete(stern_gerlach::sg_family(branch, t), th).matrix(0, 0);
        } catch (const DomainError&) {
        }
        fisher.values.push_back(info);
    }
    return {{"scan.csv", {theta, model, sim, sig, fisher}}};
}

std::vector<Output> evidence(const RunConfig& c) {
    const auto& p = c.parameters;
    const auto model = model_of(p);
    const double t = num(p, "theta");
    const auto family = eprb::pair_family(model, t);
    Column eps{"epsilon", {}}, ev{"log_evidence", {}}, quad{"quadratic_prediction", {}},
        rem{"remainder", {}}, cubic{"cubic_estimate", {}}, fisher{"fisher", {}};
    for (const auto& e : p.at("epsilons")) {
        const double th[1] = {t};
        const double ep[1] = {e.get<double>()};
        const auto r = inference::evidence_quadratic(family, th, ep, num(p, "N"));
        eps.values.push_back(ep[0]);
        ev.values.push_back(r.log_evidence);
        quad.values.push_back(r.quadratic_prediction);
        rem.values.push_back(std::abs(r.log_evidence - r.quadratic_prediction));
        cubic.values.push_back(r.cubic_remainder_bound);
        fisher.values.push_back(inference::fisher_discrete(family, th).matrix(0, 0));
    }
    return {{"evidence.csv", {eps, ev, quad, rem, cubic, fisher}}};
}

std::vector<Output> appendix_a(const RunConfig& c) {
    const auto& p = c.parameters;
    Column m_col{"m", {}}, table{"table", {}}, trials{"N", {}}, comps{"compositions", {}},
        maxi{"maximizers", {}}, holds{"bounds_hold", {}};
    for (const auto& mj : p.at("m_values")) {
        const auto m = static_cast<std::uint64_t>(mj.get<double>());
        for (std::int64_t t = 0; t < integer(p, "tables"); ++t) {
            CounterRng rng(*c.seed, (m << 32) | static_cast<std::uint64_t>(t));
            std::vector<double> probs(m);
            double total = 0.0;
            for (auto& x : probs) total += (x = 0.01 + rng.uniform());
            for (auto& x : probs) x /= total;
            for (std::int64_t n = 1; n <= integer(p, "N_max"); ++n) {
                const auto r = inference::appendix_a_suite(probs, static_cast<std::uint32_t>(n));
                m_col.values.push_back(double(m));
                table.values.push_back(double(t));
                trials.values.push_back(double(n));
                comps.values.push_back(double(r.compositions));
                maxi.values.push_back(double(r.maximizers.size()));
                holds.values.push_back(r.all_bounds_hold ? 1.0 : 0.0);
            }
        }
    }
    return {{"appendix_a.csv", {m_col, table, trials, comps, maxi, holds}}};
}

struct Stationary {
    Grid1D grid;
    stationary::StationaryProblem problem;
};

Stationary stationary_setup(const Json& p) {
    const auto grid = Grid1D::over(num(p, "x_min"), num(p, "x_max"),
                                   static_cast<std::size_t>(integer(p, "n_points")));
    const auto v = p.at("potential").get<std::string>() == "harmonic"
                       ? stationary::harmonic_potential(grid, num(p, "omega"), num(p, "mass"))
                       : stationary::zero_potential(grid);
    stationary::StationaryProblem problem{v, 0.0, num(p, "mass"), num(p, "lambda"), num(p, "hbar")};
    problem.validate(p.at("default_units").get<bool>());
    return {grid, problem};
}

std::vector<Output> tise_solve(const RunConfig& c) {
    const auto& p = c.parameters;
    const auto s = stationary_setup(p);
    const auto pairs =
        stationary::solve_eigen(s.problem, s.grid, static_cast<std::size_t>(integer(p, "n_states")));
    Column state{"state", {}}, energy{"energy", {}};
    std::vector<Column> states{{"x", s.grid.nodes()}};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        state.values.push_back(double(k));
        energy.values.push_back(pairs[k].energy);
        Column col{"psi_" + std::to_string(k), {}};
        for (const auto& z : pairs[k].state.values) col.values.push_back(z.real());
        states.push_back(std::move(col));
    }
    return {{"eigenvalues.csv", {state, energy}}, {"states.csv", std::move(states)}};
}

std::vector<Output> tise_minimize(const RunConfig& c) {
    const auto& p = c.parameters;
    auto s = stationary_setup(p);
    const auto ground = stationary::solve_eigen(s.problem, s.grid, 1).front();
    s.problem.energy = p.contains("energy") ? num(p, "energy") : ground.energy;
    stationary::MinimizeOptions opt;
    opt.max_iter = static_cast<std::size_t>(integer(p, "max_iter"));
    opt.tol = num(p, "tol");
    const auto flat = ScalarField::sample(s.grid, [](double) { return 1.0; }, FieldKind::density);
    const auto zero = ScalarField::sample(s.grid, [](double) { return 0.0; }, FieldKind::action);
    const auto r = stationary::minimize_F_direct(s.problem, s.grid, flat, zero, opt);

    const auto reference = ground.state.density();
    double sup = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        sup = std::max(sup, std::abs(r.density.values[i] - reference[i]));
    Column iter{"iteration", {}}, fval{"F", {}};
    for (std::size_t k = 0; k < r.history.size(); ++k) {
        iter.values.push_back(double(k));
        fval.values.push_back(r.history[k]);
    }
    auto one = [](const char* name, double v) { return Column{name, {v}}; };
    return {{"minimize.csv",
             {{"x", s.grid.nodes()},
              {"density", r.density.values},
              {"action", r.action.values},
              {"reference_density", reference}}},
            {"history.csv", {iter, fval}},
            {"summary.csv",
             {one("energy", s.problem.energy), one("F", r.F_value),
              one("iterations", double(r.iterations)), one("converged", r.converged ? 1.0 : 0.0),
              one("sup_density_error", sup)}}};
}

dynamic::PropagatorConfig propagator_config(const Json& p, const Grid1D& grid) {
    dynamic::PropagatorConfig cfg;
    cfg.grid = grid;
    cfg.dt = num(p, "dt");
    cfg.t_final = num(p, "t_final");
    cfg.mass = num(p, "mass");
    cfg.hbar = num(p, "hbar");
    cfg.lambda = num(p, "lambda");
    cfg.default_units = p.at("default_units").get<bool>();
    return cfg;
}

std::vector<Output> tdse_run(const RunConfig& c) {
    const auto& p = c.parameters;
    const auto grid = Grid1D::over(num(p, "x_min"), num(p, "x_max"),
                                   static_cast<std::size_t>(integer(p, "n_points")));
    auto cfg = propagator_config(p, grid);
    cfg.sample_stride = static_cast<std::size_t>(integer(p, "sample_stride"));
    const double omega = num(p, "omega"), mass = num(p, "mass");
    auto fields = p.at("potential").get<std::string>() == "harmonic"
                      ? dynamic::GaugeField::static_potential(
                            [=](double x) { return 0.5 * mass * omega * omega * x * x; })
                      : dynamic::GaugeField::free();
    fields.charge = num(p, "charge");
    fields.light_speed = num(p, "light_speed");
    const auto psi0 = gaussian_packet(grid, num(p, "x0"), num(p, "sigma"), num(p, "k0"));
    const auto run = dynamic::propagate(psi0, fields, cfg);
    const auto& tr = run.trace;
    return {{"trace.csv",
             {{"t", tr.times},
              {"norm", tr.norm},
              {"mean_x", tr.mean_x},
              {"width", tr.width},
              {"fisher_spatial", tr.fisher_spatial},
              {"hje_residual", tr.hje_residual}}}};
}

std::vector<Output> gauge_check(const RunConfig& c) {
    const auto& p = c.parameters;
    const double amp = num(p, "chi_amplitude"), freq = num(p, "chi_frequency");
    const dynamic::SpaceTimeFn chi = [=](double x, double t) { return amp * x * std::sin(freq * t); };
    auto fields = dynamic::GaugeField::free();
    fields.charge = num(p, "charge");
    fields.light_speed = num(p, "light_speed");
    Column dt{"dt", {}}, h{"h", {}}, dens{"density_gap", {}}, wave{"wave_gap", {}},
        ratio{"wave_ratio", {}};
    for (std::int64_t level = 0; level < integer(p, "levels"); ++level) {
        const double scale = std::ldexp(1.0, -static_cast<int>(level));
        const double hl = num(p, "h") * scale;
        const double span = num(p, "x_max") - num(p, "x_min");
        const auto nodes = static_cast<std::size_t>(std::llround(span / hl)) + 1;
        const auto grid = Grid1D::over(num(p, "x_min"), num(p, "x_max"), nodes);
        auto cfg = propagator_config(p, grid);
        cfg.dt *= scale;
        const auto psi0 = gaussian_packet(grid, 0.0, num(p, "sigma"), num(p, "k0"));
        const auto gap = dynamic::gauge_covariance_gap(psi0, fields, chi, cfg);
        dt.values.push_back(cfg.dt);
        h.values.push_back(grid.spacing);
        dens.values.push_back(gap.density_gap);
        ratio.values.push_back(wave.values.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                   : wave.values.back() / gap.wave_gap);
        wave.values.push_back(gap.wave_gap);
    }
    return {{"gauge.csv", {dt, h, dens, wave, ratio}}};
}

std::vector<Output> dispatch(const RunConfig& c) {
    const auto& e = c.experiment;
    if (e == "eprb-scan") return eprb_scan(c);
    if (e == "eprb-simulate") return eprb_simulate(c);
    if (e == "sg-scan") return sg_scan(c);
    if (e == "evidence") return evidence(c);
    if (e == "appendix-a") return appendix_a(c);
    if (e == "tise-solve") return tise_solve(c);
    if (e == "tise-minimize") return tise_minimize(c);
    if (e == "tdse-run") return tdse_run(c);
    if (e == "gauge-check") return gauge_check(c);
    throw DomainError("unknown experiment " + e);
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    write_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

} // namespace

Json RunManifest::to_json() const {
    Json files = Json::array();
    for (const auto& f : output_files) files.push_back({{"path", f.path}, {"sha256", f.sha256}});
    Json j{{"config_digest", config_digest},
           {"tool_version", tool_version},
           {"started", started},
           {"finished", finished},
           {"output_files", files},
           {"status", status}};
    if (!error_name.empty()) j["error"] = {{"name", error_name}, {"message", error_message}};
    return j;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

RunManifest run(const RunConfig& config, const std::optional<fs::path>& output_dir_override) {
    const fs::path dir = output_dir_override ? *output_dir_override : fs::path(config.output_dir);
    RunManifest manifest;
    manifest.config_digest = sha256_hex(config.canonical());
    manifest.tool_version = tool_version;
    manifest.started = utc_now();
    try {
        if (is_stochastic(config.experiment) && !config.seed)
            throw DomainError("experiment " + config.experiment + " needs a seed");
        for (const auto& out : dispatch(config)) {
            emit_csv(out.columns, dir / out.name);
            manifest.output_files.push_back({out.name, sha256_file(dir / out.name)});
        }
        manifest.status = "ok";
    } catch (const Error& e) {
        manifest.status = "failed";
        manifest.error_name = e.name();
        manifest.error_message = e.what();
        manifest.finished = utc_now();
        write_manifest(dir, manifest);
        throw;
    }
    manifest.finished = utc_now();
    write_manifest(dir, manifest);
    return manifest;
}

} // namespace robustqm::cli
