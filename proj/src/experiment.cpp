#include "spectraflow/experiment.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "spectraflow/models.hpp"
#include "spectraflow/quadrature.hpp"
#include "spectraflow/quasilocal.hpp"
#include "spectraflow/spectral_flow.hpp"

namespace spectraflow {

// ---------------------------------------------------------------- config ---

namespace {

std::string trim(const std::string& s) {
	size_t a = 0, b = s.size();
	while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
	while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
	return s.substr(a, b - a);
}

}  // namespace

Config parse_config(std::istream& in) {
	Config cfg;
	std::string line, section;
	int lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		const auto hash = line.find('#');
		if (hash != std::string::npos) line.erase(hash);
		line = trim(line);
		if (line.empty()) continue;
		if (line.front() == '[') {
			if (line.back() != ']')
				throw std::invalid_argument("config line " + std::to_string(lineno) +
				                            ": unterminated section header");
			section = trim(line.substr(1, line.size() - 2));
			if (section.empty())
				throw std::invalid_argument("config line " + std::to_string(lineno) +
				                            ": empty section name");
			continue;
		}
		const auto eq = line.find('=');
		if (eq == std::string::npos)
			throw std::invalid_argument("config line " + std::to_string(lineno) +
			                            ": expected key = value");
		const std::string key = trim(line.substr(0, eq));
		const std::string value = trim(line.substr(eq + 1));
		if (key.empty())
			throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
		cfg.values[section.empty() ? key : section + "." + key] = value;
	}
	return cfg;
}

Config load_config(const std::string& path) {
	std::ifstream in(path);
	if (!in) throw std::invalid_argument("cannot open config: " + path);
	Config cfg = parse_config(in);
	cfg.path = path;
	return cfg;
}

bool Config::has(const std::string& key) const { return values.count(key) != 0; }

const std::string& Config::get(const std::string& key) const {
	auto it = values.find(key);
	if (it == values.end()) throw std::invalid_argument("config key missing: " + key);
	return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
	auto it = values.find(key);
	return it == values.end() ? fallback : it->second;
}

double Config::number(const std::string& key) const {
	const std::string& raw = get(key);
	size_t used = 0;
	double v = 0.0;
	try {
		v = std::stod(raw, &used);
	} catch (const std::exception&) {
		throw std::invalid_argument("config key " + key + ": not a number: " + raw);
	}
	if (trim(raw.substr(used)).size())
		throw std::invalid_argument("config key " + key + ": not a number: " + raw);
	return v;
}

double Config::number(const std::string& key, double fallback) const {
	return has(key) ? number(key) : fallback;
}

long Config::integer(const std::string& key) const {
	const double v = number(key);
	const long n = static_cast<long>(std::llround(v));
	if (std::abs(v - static_cast<double>(n)) > 1e-9)
		throw std::invalid_argument("config key " + key + ": not an integer");
	return n;
}

long Config::integer(const std::string& key, long fallback) const {
	return has(key) ? integer(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
	if (!has(key)) return fallback;
	std::string v = get(key);
	for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
	if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
	if (v == "false" || v == "no" || v == "off" || v == "0") return false;
	throw std::invalid_argument("config key " + key + ": not a boolean: " + v);
}

std::vector<double> Config::list(const std::string& key) const {
	std::string raw = get(key);
	for (auto& c : raw)
		if (c == ',' || c == ';') c = ' ';
	std::istringstream in(raw);
	std::vector<double> out;
	double v;
	while (in >> v) out.push_back(v);
	if (!in.eof()) throw std::invalid_argument("config key " + key + ": malformed list");
	return out;
}

std::vector<double> Config::list(const std::string& key, std::vector<double> fallback) const {
	return has(key) ? list(key) : fallback;
}

// ------------------------------------------------------------ run record ---

bool RunRecord::all_pass() const {
	for (const auto& v : verdicts)
		if (!v.pass) return false;
	return true;
}

const Verdict* RunRecord::find(const std::string& check) const {
	for (const auto& v : verdicts)
		if (v.check == check) return &v;
	return nullptr;
}

const std::vector<std::string>& experiment_names() {
	static const std::vector<std::string> names{
	    "kernel-constants", "flow-transport",     "lppl-decay",
	    "psi-decay",        "lr-cone-tau",        "lr-cone-alpha",
	    "delta-bounds",     "volume-convergence", "symmetry-check"};
	return names;
}

int worker_count(const Config& cfg) {
	if (cfg.has("run.workers")) return static_cast<int>(cfg.integer("run.workers"));
	if (const char* env = std::getenv("SPECTRAFLOW_WORKERS")) {
		const int n = std::atoi(env);
		if (n > 0) return n;
	}
	return 1;
}

void parallel_for(int workers, int n, const std::function<void(int)>& body) {
	if (n <= 0) return;
	workers = std::min(workers, n);
	if (workers <= 1) {
		for (int i = 0; i < n; ++i) body(i);
		return;
	}
	std::atomic<int> next{0};
	std::vector<std::thread> pool;
	pool.reserve(workers);
	for (int w = 0; w < workers; ++w)
		pool.emplace_back([&] {
			for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
		});
	for (auto& t : pool) t.join();
}

// ------------------------------------------------------- shared plumbing ---

namespace {

struct ModelChoice {
	Interaction phi{MetricGraph::chain(2), {}, {}, {}};
	std::string name;
	int L = 0;
	bool periodic = false;
	SiteSet perturbation;  // support of Phi' for local_perturbation
};

char pauli_label(const Config& cfg, const std::string& key, const std::string& fallback) {
	const std::string v = cfg.get(key, fallback);
	if (v.size() == 1 && (v[0] == 'x' || v[0] == 'y' || v[0] == 'z')) return v[0];
	throw std::invalid_argument("config key " + key + ": expected x, y or z");
}

ModelChoice model_from_config(const Config& cfg, int L_override = -1) {
	ModelChoice m;
	m.name = cfg.get("model.name", "tfim");
	m.L = L_override > 0 ? L_override : static_cast<int>(cfg.integer("model.L", 8));
	const std::string boundary = cfg.get("model.boundary", "open");
	if (boundary != "open" && boundary != "periodic")
		throw std::invalid_argument("model.boundary must be open or periodic");
	m.periodic = boundary == "periodic";
	if (m.L < 2) throw std::invalid_argument("model.L must be at least 2");

	if (m.name == "tfim") {
		const double h0 = cfg.number("model.h0", 1.5);
		const double h1 = cfg.number("model.h1", 2.5);
		m.phi = tfim_family(m.L, m.periodic, h0, h1);
	} else if (m.name == "xy_chain") {
		const double g0 = cfg.number("model.g0", 1.0);
		const double g1 = cfg.number("model.g1", 1.0);
		const double h0 = cfg.number("model.h0", 1.5);
		const double h1 = cfg.number("model.h1", 2.5);
		m.phi = xy_family(
		    m.L, m.periodic, [=](double s) { return g0 + s * (g1 - g0); },
		    [=](double) { return g1 - g0; }, [=](double s) { return h0 + s * (h1 - h0); },
		    [=](double) { return h1 - h0; });
	} else if (m.name == "local_perturbation") {
		const double hb = cfg.number("model.base_h", 2.0);
		const int site = static_cast<int>(cfg.integer("model.site", m.L / 2));
		if (site < 0 || site >= m.L)
			throw std::invalid_argument("model.site out of range");
		const double amp = cfg.number("model.amplitude", 0.2);
		const MatrixXc V = amp * pauli(pauli_label(cfg, "model.op", "x"));
		Interaction base = tfim_family(m.L, m.periodic, hb, hb);
		m.perturbation = {site};
		m.phi = local_perturbation_family(base, 0.0, m.perturbation, V,
		                                  [](double s) { return s; }, [](double) { return 1.0; });
	} else {
		throw std::invalid_argument("unknown model.name: " + m.name);
	}
	return m;
}

std::vector<double> linspace(double a, double b, int n) {
	std::vector<double> out(n);
	for (int i = 0; i < n; ++i)
		out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
	return out;
}

std::vector<double> s_grid_from(const Config& cfg, int default_points) {
	if (cfg.has("flow.s_grid")) return cfg.list("flow.s_grid");
	return uniform_grid(static_cast<int>(cfg.integer("flow.s_points", default_points)));
}

FlowConfig flow_from(const Config& cfg, std::vector<double> grid) {
	FlowConfig fc;
	fc.s_grid = std::move(grid);
	fc.gamma = cfg.number("flow.gamma", 0.0);
	fc.gamma_min = cfg.number("flow.gamma_min", 0.0);
	fc.sector_count = static_cast<int>(cfg.integer("flow.sector_count", 1));
	fc.kernel_terms = static_cast<int>(cfg.integer("flow.kernel_terms", 10000));
	return fc;
}

FFunction fa_from(const Config& cfg) {
	return FFunction::exp_weighted(cfg.number("decay.nu", 1.0), cfg.number("decay.a", 1.0));
}

void add_check(RunRecord& rec, const std::string& name, bool pass, double value,
               double threshold) {
	rec.verdicts.push_back({name, pass, value, threshold});
}

void add_meta(RunRecord& rec, const std::string& key, double v) {
	std::ostringstream out;
	out << std::setprecision(17) << v;
	rec.metadata.emplace_back(key, out.str());
}

// worst step up of a column that should not grow
double worst_increase(const std::vector<double>& v) {
	double worst = 0.0;
	for (size_t i = 0; i + 1 < v.size(); ++i) worst = std::max(worst, v[i + 1] - v[i]);
	return worst;
}

std::vector<int> int_list(const Config& cfg, const std::string& key, std::vector<int> fallback) {
	if (!cfg.has(key)) return fallback;
	std::vector<int> out;
	for (double v : cfg.list(key)) {
		const int n = static_cast<int>(std::llround(v));
		if (std::abs(v - n) > 1e-9)
			throw std::invalid_argument("config key " + key + ": expected integers");
		out.push_back(n);
	}
	return out;
}

std::vector<LRPairSpec> pairs_from(const Config& cfg, const std::string& section, int L) {
	const int a_site = static_cast<int>(cfg.integer(section + ".a_site", 0));
	const char a_op = pauli_label(cfg, section + ".a_op", "z");
	const char b_op = pauli_label(cfg, section + ".b_op", "z");
	std::vector<int> b_default;
	for (int d = 1; d <= std::min(10, L - 1 - a_site); ++d) b_default.push_back(a_site + d);
	std::vector<int> b_sites = int_list(cfg, section + ".b_sites", b_default);
	if (b_sites.empty()) throw std::invalid_argument(section + ".b_sites: empty pair grid");
	std::vector<LRPairSpec> pairs;
	for (int b : b_sites) {
		if (b < 0 || b >= L || b == a_site)
			throw std::invalid_argument(section + ".b_sites: site out of range");
		pairs.push_back({{{1.0, {{a_site, a_op}}}}, {{1.0, {{b, b_op}}}}});
	}
	return pairs;
}

}  // namespace

// ----------------------------------------------------------- experiments ---

namespace {

void run_kernel_constants(const Config& cfg, RunRecord& rec) {
	const auto b = reproduce_constants();
	add_check(rec, "eta_star_bracket", b.eta_bracket_ok, b.eta_star, 14251.0);
	add_check(rec, "zeta_star_bracket", b.zeta_bracket_ok, b.zeta_star, 36058.0);
	add_check(rec, "K_within_1pct", b.K_within_1pct, b.K_const, 14708.0);

	const int n_terms = static_cast<int>(cfg.integer("kernel.n_terms", 10000));
	const double norm_tol = cfg.number("kernel.norm_tolerance", 1e-8);
	const double sigma_tol = cfg.number("kernel.sigma_tolerance", 1e-8);
	const int table_points = static_cast<int>(cfg.integer("kernel.table_points", 121));
	const int omega_points = static_cast<int>(cfg.integer("kernel.omega_points", 100));

	CsvTable profile{"profile", {"gamma", "t", "w", "W", "I"}, {}};
	CsvTable sigma_tab{"sigma", {"gamma", "omega", "im_sigma", "band_defect"}, {}};

	for (double gamma : cfg.list("kernel.gammas", {0.5, 1.0, 2.0})) {
		const WeightKernel k(gamma, n_terms);
		std::ostringstream tago;
		tago << "gamma_" << gamma;
		const std::string tag = tago.str();

		auto seeds = geometric_seeds(0.0, k.t_cut(), 0.5 / gamma, 1.1);
		auto q = integrate_adaptive([&](double t) { return k.eval_w(t); }, seeds, 1e-12, 1e-12);
		const double norm_defect = std::abs(2.0 * q.value - 1.0);
		add_check(rec, "normalization_" + tag, norm_defect <= norm_tol, norm_defect, norm_tol);

		const bool a1_ok = k.a1() > gamma / 7.0 && k.a1() < gamma / 2.0;
		add_check(rec, "a1_bracket_" + tag, a1_ok, k.a1(), gamma / 2.0);
		const bool c_ok = k.c_norm() > gamma / (2.0 * M_PI) && k.c_norm() < gamma / M_PI;
		add_check(rec, "c_bracket_" + tag, c_ok, k.c_norm(), gamma / M_PI);

		double band_worst = 0.0;
		for (double omega : linspace(gamma, 10.0 * gamma, omega_points)) {
			const auto s = k.sigma(omega);
			band_worst = std::max(band_worst, std::abs(s + cplx(0.0, 1.0) / omega));
		}
		add_check(rec, "band_limit_" + tag, band_worst <= sigma_tol, band_worst, sigma_tol);

		for (double t : linspace(0.0, 30.0 / gamma, table_points))
			profile.rows.push_back({gamma, t, k.eval_w(t), k.eval_W(t),
			                        t > 0.0 ? k.eval_I(t) : 0.5 * k.norm_W1()});
		for (double omega : linspace(0.1 * gamma, 10.0 * gamma, omega_points)) {
			const auto s = k.sigma(omega);
			const double defect =
			    omega >= gamma ? std::abs(s + cplx(0.0, 1.0) / omega) : 0.0;
			sigma_tab.rows.push_back({gamma, omega, s.imag(), defect});
		}
	}
	rec.tables.push_back(std::move(profile));
	rec.tables.push_back(std::move(sigma_tab));
	add_meta(rec, "derived.eta_star", b.eta_star);
	add_meta(rec, "derived.zeta_star", b.zeta_star);
	add_meta(rec, "derived.K", b.K_const);
}

// fixed small instances for the two integral forms of the generator; the
// quadrature truncation T only needs to dominate the kernel mass
double two_form_defect(double T) {
	struct Inst {
		MatrixXc H, Hp;
		double gamma;
	};
	std::vector<Inst> insts;
	{
		MatrixXc Hp(2, 2);
		Hp << cplx(0.4, 0.0), cplx(0.1, -0.7), cplx(0.1, 0.7), cplx(-1.1, 0.0);
		insts.push_back({pauli('z') + 0.3 * pauli('x'), Hp, 2.0});
	}
	{
		MatrixXc M(4, 4);
		M << cplx(0.0, 0.0), cplx(0.3, 0.2), cplx(0.0, -0.4), cplx(0.1, 0.0), cplx(0.3, -0.2),
		    cplx(0.5, 0.0), cplx(0.2, 0.1), cplx(0.0, 0.3), cplx(0.0, 0.4), cplx(0.2, -0.1),
		    cplx(-0.7, 0.0), cplx(0.6, 0.0), cplx(0.1, 0.0), cplx(0.0, -0.3), cplx(0.6, 0.0),
		    cplx(0.2, 0.0);
		const MatrixXc Q = diagonalize(M).vectors;
		Eigen::VectorXd levels(4);
		levels << 0.0, 3.0, 3.3, 6.0;
		MatrixXc Hp(4, 4);
		Hp << cplx(1.0, 0.0), cplx(0.2, 0.5), cplx(0.0, -0.3), cplx(0.4, 0.1), cplx(0.2, -0.5),
		    cplx(-0.4, 0.0), cplx(0.7, 0.0), cplx(0.0, 0.2), cplx(0.0, 0.3), cplx(0.7, 0.0),
		    cplx(0.9, 0.0), cplx(-0.1, 0.6), cplx(0.4, -0.1), cplx(0.0, -0.2), cplx(-0.1, -0.6),
		    cplx(0.3, 0.0);
		insts.push_back({MatrixXc(Q * levels.asDiagonal() * Q.adjoint()), Hp, 2.5});
	}

	std::vector<double> seeds;
	for (double t = 0.0; t < T; t += 0.5) seeds.push_back(t);
	seeds.push_back(T);

	double worst = 0.0;
	for (const auto& inst : insts) {
		auto spec = diagonalize(inst.H);
		track_sector(spec, 0, 1, 0.0, 0.0);
		const WeightKernel kernel(inst.gamma);
		const MatrixXc D = generator_D(spec, inst.Hp, kernel);
		const double scale = spectral_norm(inst.Hp);

		// integral of W(t) e^{-i om t} over the line, and the same multiplier
		// through the even kernel as -i (1 - w_hat(om)) / om
		std::vector<std::function<cplx(double)>> forms;
		forms.emplace_back([&kernel, &seeds](double om) -> cplx {
			auto q = integrate_adaptive(
			    [&](double t) { return kernel.eval_W(t) * std::sin(om * t); }, seeds, 1e-11,
			    1e-11);
			return {0.0, -2.0 * q.value};
		});
		forms.emplace_back([&kernel, &seeds](double om) -> cplx {
			auto q = integrate_adaptive(
			    [&](double t) { return kernel.eval_w(t) * (1.0 - std::cos(om * t)); }, seeds,
			    1e-11, 1e-11);
			return {0.0, -2.0 * q.value / om};
		});

		const MatrixXc Ht = spec.vectors.adjoint() * inst.Hp * spec.vectors;
		for (const auto& form : forms) {
			std::map<double, cplx> memo;  // the multiplier is odd, cache on |om|
			auto eval = [&](double om) -> cplx {
				if (om == 0.0) return {0.0, 0.0};
				auto it = memo.find(std::abs(om));
				if (it == memo.end()) it = memo.emplace(std::abs(om), form(std::abs(om))).first;
				return om > 0.0 ? it->second : -it->second;
			};
			MatrixXc Dt(Ht.rows(), Ht.cols());
			for (long j = 0; j < Ht.rows(); ++j)
				for (long k = 0; k < Ht.cols(); ++k)
					Dt(j, k) = eval(spec.energies(k) - spec.energies(j)) * Ht(j, k);
			const MatrixXc Dq = spec.vectors * Dt * spec.vectors.adjoint();
			worst = std::max(worst, spectral_norm(MatrixXc(D - Dq)) / scale);
		}
	}
	return worst;
}

void run_flow_transport(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	const auto grid = s_grid_from(cfg, 201);
	FlowConfig fc = flow_from(cfg, grid);
	std::string engine = cfg.get("flow.engine", "auto");
	if (engine == "auto") engine = (m.name == "tfim" && m.L >= 10) ? "blocked" : "dense";

	std::vector<double> residuals, gaps, gen_norms;
	double gamma_used = 0.0;
	if (engine == "blocked") {
		auto res = integrate_flow_blocked(m.phi, fc);
		residuals = res.transport_residuals;
		gaps = res.gaps;
		gen_norms = res.generator_norms;
		gamma_used = res.gamma;
	} else {
		auto res = integrate_flow(m.phi, fc);
		residuals = res.transport_residuals;
		gaps = res.gaps;
		gen_norms = res.generator_norms;
		gamma_used = res.gamma;
	}
	add_meta(rec, "derived.gamma", gamma_used);

	CsvTable flow{"transport", {"s", "gap", "transport_residual", "d_norm"}, {}};
	double worst = 0.0;
	for (size_t i = 0; i < grid.size(); ++i) {
		worst = std::max(worst, residuals[i]);
		flow.rows.push_back({grid[i], gaps[i], residuals[i], i == 0 ? 0.0 : gen_norms[i - 1]});
	}
	rec.tables.push_back(std::move(flow));
	const double tol = cfg.number("check.residual_tolerance", 1e-5);
	add_check(rec, "transport_residual", worst <= tol, worst, tol);

	if (cfg.flag("check.oracle", true)) {
		// one qubit H(s) = sigma_z + s sigma_x, gap 2 sqrt(1 + s^2)
		InteractionTerm t;
		t.support = {0};
		t.op = [](double s) -> MatrixXc { return pauli('z') + s * pauli('x'); };
		t.d_op = [](double) -> MatrixXc { return pauli('x'); };
		t.has_derivative = true;
		Interaction one{MetricGraph::chain(1), {t}, {}, {}};
		FlowConfig ofc;
		ofc.s_grid = uniform_grid(static_cast<int>(cfg.integer("check.oracle_points", 1001)));
		ofc.gamma = 1.9;
		auto res = integrate_flow(one, ofc);
		const double r = *std::max_element(res.transport_residuals.begin(),
		                                   res.transport_residuals.end());
		const double otol = cfg.number("check.oracle_tolerance", 1e-6);
		add_check(rec, "oracle_residual", r <= otol, r, otol);
	}

	if (cfg.flag("check.order", true)) {
		const auto points = int_list(cfg, "check.order_points", {51, 101, 201});
		std::vector<double> res_at(points.size());
		const int workers = worker_count(cfg);
		parallel_for(workers, static_cast<int>(points.size()), [&](int i) {
			FlowConfig ofc = fc;
			ofc.s_grid = uniform_grid(points[i]);
			if (engine == "blocked") {
				auto r = integrate_flow_blocked(m.phi, ofc);
				res_at[i] = *std::max_element(r.transport_residuals.begin(),
				                              r.transport_residuals.end());
			} else {
				auto r = integrate_flow(m.phi, ofc);
				res_at[i] = *std::max_element(r.transport_residuals.begin(),
				                              r.transport_residuals.end());
			}
		});
		CsvTable ord{"order", {"points", "max_residual"}, {}};
		double order = 1e300;
		for (size_t i = 0; i < points.size(); ++i) {
			ord.rows.push_back({static_cast<double>(points[i]), res_at[i]});
			if (i > 0 && res_at[i] > 0.0)
				order = std::min(order, std::log2(res_at[i - 1] / res_at[i]));
		}
		rec.tables.push_back(std::move(ord));
		const double omin = cfg.number("check.order_min", 1.9);
		add_check(rec, "halving_order", order >= omin, order, omin);
	}

	if (cfg.flag("check.block_oracle", false)) {
		// inter-sector entries of D against i H'_{jk} / (E_j - E_k)
		const double btol = cfg.number("check.block_tolerance", 1e-8);
		const WeightKernel kernel(gamma_used, fc.kernel_terms);
		double worst_block = 0.0;
		for (double s : grid) {
			SpectralData sp = diagonalize(hamiltonian(m.phi, s));
			track_sector(sp, fc.sector_first, fc.sector_count, fc.gamma_min, s);
			const MatrixXc Hp = d_hamiltonian(m.phi, s);
			const double scale = spectral_norm(Hp);
			if (scale == 0.0) continue;
			const MatrixXc Dt = sp.vectors.adjoint() * generator_D(sp, Hp, kernel) * sp.vectors;
			const MatrixXc Ht = sp.vectors.adjoint() * Hp * sp.vectors;
			const long lo = fc.sector_first, hi = fc.sector_first + fc.sector_count;
			for (long j = lo; j < hi; ++j)
				for (long k = 0; k < Ht.cols(); ++k) {
					if (k >= lo && k < hi) continue;
					const cplx want = cplx(0.0, 1.0) * Ht(j, k) / (sp.energies(j) - sp.energies(k));
					worst_block = std::max(worst_block, std::abs(Dt(j, k) - want) / scale);
					const cplx wantT =
					    cplx(0.0, 1.0) * Ht(k, j) / (sp.energies(k) - sp.energies(j));
					worst_block = std::max(worst_block, std::abs(Dt(k, j) - wantT) / scale);
				}
		}
		add_check(rec, "block_oracle", worst_block <= btol, worst_block, btol);
	}

	if (cfg.flag("check.two_form", false)) {
		const double tol2 = cfg.number("check.two_form_tolerance", 1e-6);
		const double defect = two_form_defect(cfg.number("check.two_form_T", 160.0));
		add_check(rec, "two_form", defect <= tol2, defect, tol2);
	}
}

void run_lppl_decay(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	if (m.name != "local_perturbation")
		throw std::invalid_argument("lppl-decay requires model.name = local_perturbation");
	const auto grid = s_grid_from(cfg, 21);
	FlowConfig fc = flow_from(cfg, grid);
	const auto r_values = int_list(cfg, "lppl.r_values", {0, 1, 2, 3, 4});

	auto res = lppl_experiment(m.phi, m.perturbation, r_values, fc);
	add_meta(rec, "derived.gamma", res.gamma);
	if (!res.warning.empty()) rec.metadata.emplace_back("warning", res.warning);

	CsvTable tab{"lppl",
	             {"R", "u_diff", "projector_residual", "observable_shift", "observable_site"},
	             {}};
	std::vector<double> u_col, p_col;
	for (const auto& row : res.rows) {
		tab.rows.push_back({static_cast<double>(row.R), row.u_diff, row.projector_residual,
		                    row.observable_shift, static_cast<double>(row.observable_site)});
		u_col.push_back(row.u_diff);
		p_col.push_back(row.projector_residual);
	}
	rec.tables.push_back(std::move(tab));

	const double floor = cfg.number("lppl.floor", 1e-8);
	add_check(rec, "u_diff_monotone", worst_increase(u_col) <= floor, worst_increase(u_col),
	          floor);
	add_check(rec, "projector_monotone", worst_increase(p_col) <= floor, worst_increase(p_col),
	          floor);

	// the observable sits just outside each ball; the far collar beats the near one
	double near = std::numeric_limits<double>::quiet_NaN();
	for (const auto& row : res.rows)
		if (row.R >= 1) {
			near = row.observable_shift;
			break;
		}
	const double far = res.rows.empty() ? near : res.rows.back().observable_shift;
	const bool shift_ok =
	    res.corollary_valid && std::isfinite(near) && std::isfinite(far) && far <= near + floor;
	add_check(rec, "outside_shift", shift_ok, far, near);
}

void run_psi_decay(const Config& cfg, RunRecord& rec) {
	const auto sizes = int_list(cfg, "psi.sizes", {6, 8, 10});
	if (sizes.empty()) throw std::invalid_argument("psi.sizes: empty");
	const auto grid = s_grid_from(cfg, 5);
	FlowConfig fc = flow_from(cfg, grid);
	if (!(fc.gamma > 0.0)) throw std::invalid_argument("psi-decay: flow.gamma must be positive");
	const WeightKernel kernel(fc.gamma, fc.kernel_terms);
	const FFunction fa = fa_from(cfg);

	struct PerSize {
		double cert = 0.0, cfit = 0.0, recon = 0.0, theta = 0.0;
		std::vector<std::pair<int, double>> profile;
		std::vector<double> envelope;
	};
	std::vector<PerSize> out(sizes.size());
	const bool reconstruct = cfg.flag("psi.reconstruction", true);

	parallel_for(worker_count(cfg), static_cast<int>(sizes.size()), [&](int i) {
		const ModelChoice m = model_from_config(cfg, sizes[i]);
		auto c = lr_constants(m.phi, fa, grid);
		auto psi = build_psi(m.phi, grid, kernel, c, m.phi.graph.all_sites(), fc.sector_first,
		                     fc.sector_count, fc.gamma_min);
		PerSize& p = out[i];
		p.cert = psi.norm_certificate;
		p.theta = psi.f_psi.theta;
		p.profile = psi_diameter_profile(psi, m.phi.graph);
		for (const auto& [d, v] : p.profile)
			if (double f = psi.f_psi(static_cast<double>(d)); f > 0.0)
				p.cfit = std::max(p.cfit, v / f);
		for (const auto& [d, v] : p.profile)
			p.envelope.push_back(p.cfit * psi.f_psi(static_cast<double>(d)));
		if (reconstruct) {
			for (size_t k = 0; k < grid.size(); ++k) {
				SpectralData sp = diagonalize(hamiltonian(m.phi, grid[k]));
				track_sector(sp, fc.sector_first, fc.sector_count, fc.gamma_min, grid[k]);
				const MatrixXc D = generator_D(sp, d_hamiltonian(m.phi, grid[k]), kernel);
				const double dn = spectral_norm(D);
				if (dn == 0.0) continue;
				p.recon = std::max(p.recon, spectral_norm(MatrixXc(psi_sum(psi, k) - D)) / dn);
			}
		}
	});

	CsvTable prof{"profile", {"L", "diam", "max_norm", "envelope"}, {}};
	CsvTable certs{"certificate", {"L", "certificate", "fit_constant", "theta"}, {}};
	const double floor = cfg.number("psi.floor", 1e-12);
	bool monotone = true;
	double worst_step = 0.0;
	for (size_t i = 0; i < sizes.size(); ++i) {
		const PerSize& p = out[i];
		certs.rows.push_back({static_cast<double>(sizes[i]), p.cert, p.cfit, p.theta});
		for (size_t j = 0; j < p.profile.size(); ++j) {
			prof.rows.push_back({static_cast<double>(sizes[i]),
			                     static_cast<double>(p.profile[j].first), p.profile[j].second,
			                     p.envelope[j]});
			if (j > 0 && p.profile[j - 1].first >= 2 && p.profile[j].second > floor &&
			    p.profile[j].second > p.profile[j - 1].second * (1.0 + 1e-9)) {
				monotone = false;
				worst_step = std::max(worst_step, p.profile[j].second - p.profile[j - 1].second);
			}
		}
	}
	rec.tables.push_back(std::move(prof));
	rec.tables.push_back(std::move(certs));

	double cmin = 1e300, cmax = 0.0, recon = 0.0;
	bool finite = true;
	for (const auto& p : out) {
		finite = finite && std::isfinite(p.cert) && p.cert > 0.0;
		cmin = std::min(cmin, p.cert);
		cmax = std::max(cmax, p.cert);
		recon = std::max(recon, p.recon);
	}
	add_check(rec, "certificate_finite", finite, cmax, 0.0);
	if (cfg.flag("psi.check_profile", true))
		add_check(rec, "profile_monotone", monotone, worst_step, 0.0);
	const double stab = cfg.number("psi.stability", 0.10);
	const double variation = cmax > 0.0 ? (cmax - cmin) / cmax : 0.0;
	add_check(rec, "certificate_stable", variation <= stab, variation, stab);
	if (reconstruct) {
		const double rtol = cfg.number("psi.reconstruction_tolerance", 1e-10);
		add_check(rec, "reconstruction", recon <= rtol, recon, rtol);
	}
}

void run_lr_cone_tau(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	const double s_eval = cfg.number("tau.s", 0.0);
	const auto pairs = pairs_from(cfg, "tau", m.L);
	std::vector<double> t_grid = cfg.has("tau.t_grid")
	                                 ? cfg.list("tau.t_grid")
	                                 : linspace(0.0, cfg.number("tau.t_max", 4.0),
	                                            static_cast<int>(cfg.integer("tau.t_points", 9)));
	const FFunction fa = fa_from(cfg);
	auto c = lr_constants(m.phi, fa, uniform_grid(5));
	add_meta(rec, "derived.va", c.va);
	add_meta(rec, "derived.ka", c.ka);
	add_meta(rec, "derived.phi_norm", c.phi_norm);

	std::string engine = cfg.get("flow.engine", "auto");
	if (engine == "auto") engine = m.name == "tfim" ? "blocked" : "dense";
	LRMeasurement meas;
	if (engine == "blocked") {
		SectorSpectralData spec = diagonalize_blocked(m.phi.pauli_view(s_eval), m.L);
		meas = lr_measure_tau_blocked(spec, m.phi.graph, pairs, t_grid, c, fa);
	} else {
		SpectralData spec = diagonalize(hamiltonian(m.phi, s_eval));
		meas = lr_measure_tau(spec, m.phi.graph, pairs, t_grid, c, fa);
	}

	CsvTable tab{"tau", {"distance", "t", "commutator_norm", "envelope"}, {}};
	for (size_t p = 0; p < pairs.size(); ++p)
		for (size_t i = 0; i < t_grid.size(); ++i)
			tab.rows.push_back({static_cast<double>(meas.distances[p]), t_grid[i],
			                    meas.values[p][i], meas.envelopes[p][i]});
	rec.tables.push_back(std::move(tab));
	add_check(rec, "envelope_violations", meas.envelope_violations == 0,
	          static_cast<double>(meas.envelope_violations), 0.0);
	add_check(rec, "ceiling_violations", meas.ceiling_violations == 0,
	          static_cast<double>(meas.ceiling_violations), 0.0);
}

void run_lr_cone_alpha(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	std::vector<double> s_grid = cfg.has("alpha.s_grid")
	                                 ? cfg.list("alpha.s_grid")
	                                 : std::vector<double>{0.0, 0.001, 0.25, 0.5, 0.75, 1.0};
	FlowConfig fc = flow_from(cfg, s_grid);
	if (!(fc.gamma > 0.0))
		throw std::invalid_argument("lr-cone-alpha: flow.gamma must be positive");
	const auto pairs = pairs_from(cfg, "alpha", m.L);
	const FFunction fa = fa_from(cfg);

	// the norm certificate comes from build_psi on a window that fits dense
	// algebra; the envelope constants are recalibrated on the measurement graph
	const int psi_L =
	    static_cast<int>(cfg.integer("alpha.psi_L", std::min(m.L, 10)));
	if (psi_L < 2 || psi_L > m.L)
		throw std::invalid_argument("lr-cone-alpha: alpha.psi_L out of range");
	const ModelChoice mw = psi_L == m.L ? m : model_from_config(cfg, psi_L);
	const auto psi_grid = uniform_grid(static_cast<int>(cfg.integer("alpha.psi_points", 3)));
	const WeightKernel kernel(fc.gamma, fc.kernel_terms);
	auto c = lr_constants(mw.phi, fa, psi_grid);
	auto psi = build_psi(mw.phi, psi_grid, kernel, c, mw.phi.graph.all_sites(), fc.sector_first,
	                     fc.sector_count, fc.gamma_min);
	auto env = alpha_envelope(psi, m.phi.graph);
	add_meta(rec, "derived.psi_norm", env.psi_norm);
	add_meta(rec, "derived.conv", env.conv);

	std::string engine = cfg.get("flow.engine", "auto");
	if (engine == "auto") engine = m.name == "tfim" ? "blocked" : "dense";
	LRMeasurement meas;
	if (engine == "blocked") {
		auto res = integrate_flow_blocked(m.phi, fc);
		meas = lr_measure_alpha_blocked(res.unitaries, res.s_grid, m.phi.graph, pairs, env);
	} else {
		auto res = integrate_flow(m.phi, fc);
		meas = lr_measure_alpha(res.unitaries, res.s_grid, m.phi.graph, pairs, env);
	}

	CsvTable tab{"alpha", {"distance", "s", "commutator_norm", "envelope"}, {}};
	for (size_t p = 0; p < pairs.size(); ++p)
		for (size_t i = 0; i < s_grid.size(); ++i)
			tab.rows.push_back({static_cast<double>(meas.distances[p]), s_grid[i],
			                    meas.values[p][i], meas.envelopes[p][i]});
	rec.tables.push_back(std::move(tab));
	add_check(rec, "envelope_violations", meas.envelope_violations == 0,
	          static_cast<double>(meas.envelope_violations), 0.0);
	add_check(rec, "ceiling_violations", meas.ceiling_violations == 0,
	          static_cast<double>(meas.ceiling_violations), 0.0);
}

void run_delta_bounds(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	const auto grid = cfg.list("delta.s_grid", {0.0, 0.5, 1.0});
	FlowConfig fc = flow_from(cfg, grid);
	if (!(fc.gamma > 0.0))
		throw std::invalid_argument("delta-bounds: flow.gamma must be positive");
	const WeightKernel kernel(fc.gamma, fc.kernel_terms);
	const FFunction fa = fa_from(cfg);
	auto c = lr_constants(m.phi, fa, grid);

	const int site = static_cast<int>(cfg.integer("delta.site", m.L / 2));
	const LocalOperator A{{site}, pauli(pauli_label(cfg, "delta.op", "x"))};
	const double a_norm = spectral_norm(A.matrix);
	const int n_max = static_cast<int>(cfg.integer("delta.n_max", m.L));
	const SiteSet vol = m.phi.graph.all_sites();

	CsvTable tab{"delta", {"s", "n", "delta_norm", "bound"}, {}};
	int violations = 0;
	for (double s : grid) {
		SpectralData sp = diagonalize(hamiltonian(m.phi, s));
		track_sector(sp, fc.sector_first, fc.sector_count, fc.gamma_min, s);
		const MatrixXc DA = generator_D(sp, embed(A.matrix, A.support, vol), kernel);
		for (int n = 0; n <= n_max; ++n) {
			const LocalOperator d = delta_n(DA, A.support, m.phi.graph, vol, n);
			const double dn = spectral_norm(d.matrix);
			const double bound =
			    delta_bound(kernel, c, a_norm, static_cast<int>(A.support.size()), n);
			if (dn > bound * (1.0 + 1e-9) + 1e-12) ++violations;
			tab.rows.push_back({s, static_cast<double>(n), dn, bound});
		}
	}
	rec.tables.push_back(std::move(tab));
	add_check(rec, "delta_envelope", violations == 0, static_cast<double>(violations), 0.0);

	const int trials = static_cast<int>(cfg.integer("mc.trials", 0));
	if (trials > 0) {
		const int samples = static_cast<int>(cfg.integer("mc.samples", 500));
		const int sites = static_cast<int>(cfg.integer("mc.sites", 3));
		const auto keep = int_list(cfg, "mc.keep", {0});
		const auto seed = static_cast<std::uint64_t>(cfg.integer("mc.seed", 1));
		SiteSet mvol;
		for (int i = 0; i < sites; ++i) mvol.push_back(i);
		SiteSet X(keep.begin(), keep.end());
		const long dim = 1L << sites;

		CsvTable mc{"mc", {"trial", "defect", "estimate", "se"}, {}};
		mc.rows.resize(trials);
		std::atomic<int> failures{0};
		parallel_for(worker_count(cfg), trials, [&](int trial) {
			std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial));
			std::normal_distribution<double> gauss;
			MatrixXc A_rand(dim, dim);
			for (long r = 0; r < dim; ++r)
				for (long cc = 0; cc < dim; ++cc) A_rand(r, cc) = cplx(gauss(rng), gauss(rng));
			A_rand = 0.5 * (A_rand + A_rand.adjoint()).eval();
			A_rand /= spectral_norm(A_rand);
			const auto est = approximation_defect(A_rand, X, mvol, samples,
			                                      seed ^ (0x9e3779b97f4a7c15ull + trial));
			if (est.defect > est.mc_mean + 3.0 * est.mc_se) failures.fetch_add(1);
			mc.rows[trial] = {static_cast<double>(trial), est.defect, est.mc_mean, est.mc_se};
		});
		rec.tables.push_back(std::move(mc));
		add_check(rec, "mc_defect", failures.load() == 0, static_cast<double>(failures.load()),
		          0.0);
	}
}

void run_volume_convergence(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	const auto sizes = int_list(cfg, "volumes.sizes", {4, 6, 8, 10, 12});
	if (sizes.size() < 2) throw std::invalid_argument("volumes.sizes: need at least two");
	const auto grid = s_grid_from(cfg, 3);
	FlowConfig fc = flow_from(cfg, grid);
	if (!(fc.gamma > 0.0))
		throw std::invalid_argument("volume-convergence: flow.gamma must be positive");
	const FFunction fa = fa_from(cfg);
	auto c = lr_constants(m.phi, fa, grid);

	VolumeSequence seq;
	seq.b1 = cfg.number("volumes.b1", 1.0);
	seq.b2 = cfg.number("volumes.b2", 4.0);
	seq.p = cfg.number("volumes.p", 1.0);
	for (int sz : sizes) {
		if (sz < 2 || sz > m.L || (m.L - sz) % 2 != 0)
			throw std::invalid_argument("volumes.sizes: centered interval does not fit the chain");
		SiteSet v;
		for (int x = (m.L - sz) / 2; x < (m.L + sz) / 2; ++x) v.push_back(x);
		seq.volumes.push_back(std::move(v));
	}
	validate_volume_sequence(m.phi.graph, seq);

	const int site = static_cast<int>(cfg.integer("volumes.site", m.L / 2));
	const LocalOperator A{{site}, pauli(pauli_label(cfg, "volumes.op", "z"))};

	// the top increment goes through the parity blocks when the last volume
	// is the whole flip-even chain; everything else is dense
	bool blocked_top = cfg.flag("volumes.blocked_top",
	                            m.name == "tfim" && sizes.back() == m.L && m.L >= 11);
	if (blocked_top && (m.name != "tfim" || sizes.back() != m.L))
		throw std::invalid_argument("volumes.blocked_top needs a full flip-even chain on top");

	VolumeSequence seq_dense = seq;
	if (blocked_top) seq_dense.volumes.pop_back();
	if (seq_dense.volumes.size() < 2)
		throw std::invalid_argument("volumes.sizes: blocked top needs two dense volumes below");
	VolumeTable table = volume_convergence(m.phi, seq_dense, A, fc, c);

	std::vector<double> delta = table.delta;
	if (blocked_top) {
		const SiteSet& small = seq_dense.volumes.back();
		auto flows_small = flow_on_volume(m.phi, small, fc);
		auto bres = integrate_flow_blocked(m.phi, fc);
		const MatrixXc A_small = embed(A.matrix, A.support, small);
		const SectorBlocks A_big = sector_embed(A.matrix, A.support, m.L);
		double worst = 0.0;
		for (size_t i = 0; i < grid.size(); ++i) {
			const MatrixXc as = flows_small[i].adjoint() * A_small * flows_small[i];
			const SectorBlocks lhs = sector_embed(as, small, m.L);
			const SectorBlocks rhs = sector_product(
			    sector_adjoint(bres.unitaries[i]), sector_product(A_big, bres.unitaries[i]));
			if (lhs.even != rhs.even)
				throw std::runtime_error("volume-convergence: sector parity mismatch");
			SectorBlocks diff{m.L, lhs.even, lhs.b0 - rhs.b0, lhs.b1 - rhs.b1};
			worst = std::max(worst, sector_norm(diff));
		}
		delta.push_back(worst);
	}

	CsvTable dtab{"delta", {"m", "delta"}, {}};
	for (size_t i = 0; i < delta.size(); ++i)
		dtab.rows.push_back({static_cast<double>(i), delta[i]});
	rec.tables.push_back(std::move(dtab));

	CsvTable ptab{"psi_delta", {"m", "distance", "psi_delta"}, {}};
	for (size_t i = 0; i < table.psi_delta.size(); ++i)
		for (const auto& [dist, v] : table.psi_delta[i])
			ptab.rows.push_back({static_cast<double>(i), static_cast<double>(dist), v});
	rec.tables.push_back(std::move(ptab));

	CsvTable itab{"psi_inner", {"z_lo", "z_hi", "m", "psi_delta"}, {}};
	for (const auto& [Z, column] : table.psi_delta_inner)
		for (size_t i = 0; i < column.size(); ++i)
			itab.rows.push_back({static_cast<double>(Z.front()), static_cast<double>(Z.back()),
			                     static_cast<double>(i), column[i]});
	rec.tables.push_back(std::move(itab));

	bool strict = true;
	for (size_t i = 0; i + 1 < delta.size(); ++i) strict = strict && delta[i + 1] < delta[i];
	add_check(rec, "delta_strictly_decreasing", strict, delta.empty() ? 0.0 : delta.back(), 0.0);

	const double floor = cfg.number("volumes.floor", 1e-12);
	bool col_ok = !table.psi_delta.empty();
	double col_excess = 0.0;
	if (col_ok) {
		const auto& col = table.psi_delta.back();
		for (size_t i = 0; i + 1 < col.size(); ++i)
			if (col[i + 1].second > floor && col[i + 1].second >= col[i].second) {
				col_ok = false;
				col_excess = std::max(col_excess, col[i + 1].second - col[i].second);
			}
	}
	add_check(rec, "psi_boundary_column", col_ok, col_excess, 0.0);

	bool inner_ok = true;
	double inner_excess = 0.0;
	for (const auto& [Z, column] : table.psi_delta_inner)
		for (size_t i = 0; i + 1 < column.size(); ++i)
			if (column[i + 1] > floor && column[i + 1] > column[i] * (1.0 + 1e-9)) {
				inner_ok = false;
				inner_excess = std::max(inner_excess, column[i + 1] - column[i]);
			}
	add_check(rec, "psi_inner_nonincreasing", inner_ok, inner_excess, 0.0);
}

void run_symmetry_check(const Config& cfg, RunRecord& rec) {
	const ModelChoice m = model_from_config(cfg);
	const auto grid = s_grid_from(cfg, 3);
	FlowConfig fc = flow_from(cfg, grid);
	if (!(fc.gamma > 0.0))
		throw std::invalid_argument("symmetry-check: flow.gamma must be positive");
	const WeightKernel kernel(fc.gamma, fc.kernel_terms);
	const FFunction fa = fa_from(cfg);
	auto c = lr_constants(m.phi, fa, grid);
	auto psi = build_psi(m.phi, grid, kernel, c, m.phi.graph.all_sites(), fc.sector_first,
	                     fc.sector_count, fc.gamma_min);

	const double tol = cfg.number("sym.tolerance", 1e-9);
	CsvTable tab{"defects", {"kind", "index", "value"}, {}};

	const double flip = psi_flip_defect(psi);
	tab.rows.push_back({0.0, 0.0, flip});
	add_check(rec, "flip_psi", flip <= tol, flip, tol);

	if (cfg.flag("sym.translation", true)) {
		if (!m.periodic)
			throw std::invalid_argument("symmetry-check: translation needs a periodic chain");
		const double shift = psi_translation_defect(psi, m.phi.graph);
		tab.rows.push_back({1.0, 0.0, shift});
		add_check(rec, "translation_psi", shift <= tol, shift, tol);
	}

	auto res = integrate_flow(m.phi, fc);
	std::vector<PauliTerm> fl{{1.0, {}}};
	for (int x = 0; x < m.L; ++x) fl[0].ops.push_back({x, 'x'});
	const MatrixXc F = dense_from_terms(fl, m.L);
	double worst = 0.0;
	for (size_t i = 0; i < res.unitaries.size(); ++i) {
		const double v = commutator_norm(F, res.unitaries[i]);
		tab.rows.push_back({2.0, static_cast<double>(i), v});
		worst = std::max(worst, v);
	}
	rec.tables.push_back(std::move(tab));
	add_check(rec, "flip_flow", worst <= tol, worst, tol);
}

}  // namespace

// ------------------------------------------------- validate / run / emit ---

std::vector<std::string> validate_config(const Config& cfg) {
	std::vector<std::string> out;
	auto complain = [&](const std::string& msg) { out.push_back(msg); };

	std::string exp;
	try {
		exp = cfg.get("experiment");
	} catch (const std::exception&) {
		complain("missing key: experiment");
		return out;
	}
	const auto& names = experiment_names();
	if (std::find(names.begin(), names.end(), exp) == names.end())
		complain("unknown experiment: " + exp);

	const std::string model = cfg.get("model.name", "tfim");
	if (model != "tfim" && model != "xy_chain" && model != "local_perturbation")
		complain("unknown model.name: " + model);

	long L = 8;
	try {
		L = cfg.integer("model.L", 8);
		if (L < 2) complain("model.L must be at least 2");
	} catch (const std::exception& e) {
		complain(e.what());
	}
	// psi-decay builds one model per entry of psi.sizes
	try {
		for (int sz : int_list(cfg, "psi.sizes", {}))
			L = std::max(L, static_cast<long>(sz));
	} catch (const std::exception& e) {
		complain(e.what());
	}
	try {
		const double budget = cfg.number("limits.memory_bytes", 2.0 * 1024.0 * 1024.0 * 1024.0);
		const double need = L < 60 ? 16.0 * std::pow(2.0, L) * std::pow(2.0, L) : 1e300;
		if (need > budget) {
			std::ostringstream msg;
			msg << "refusal: dense matrices at L = " << L << " need " << need
			    << " bytes, over the " << budget << " budget";
			complain(msg.str());
		}
	} catch (const std::exception& e) {
		complain(e.what());
	}

	const std::string boundary = cfg.get("model.boundary", "open");
	if (boundary != "open" && boundary != "periodic")
		complain("model.boundary must be open or periodic");

	for (const auto& [key, value] : cfg.values) {
		const bool tol = key.size() >= 9 && key.rfind("tolerance") == key.size() - 9;
		if (!tol) continue;
		try {
			if (cfg.number(key) <= 0.0) complain("non-positive tolerance: " + key);
		} catch (const std::exception& e) {
			complain(e.what());
		}
	}
	for (const char* key : {"flow.s_grid", "alpha.s_grid", "tau.t_grid", "delta.s_grid"}) {
		if (!cfg.has(key)) continue;
		try {
			const auto v = cfg.list(key);
			if (v.empty()) complain(std::string(key) + ": empty grid");
			for (size_t i = 0; i + 1 < v.size(); ++i)
				if (v[i + 1] <= v[i]) complain(std::string(key) + ": grid must be ascending");
		} catch (const std::exception& e) {
			complain(e.what());
		}
	}
	try {
		if (cfg.has("flow.s_points") && cfg.integer("flow.s_points") < 2)
			complain("flow.s_points: need at least two grid points");
		const bool needs_gamma = exp == "psi-decay" || exp == "lr-cone-alpha" ||
		                         exp == "delta-bounds" || exp == "volume-convergence" ||
		                         exp == "symmetry-check";
		if (needs_gamma && !(cfg.number("flow.gamma", 0.0) > 0.0))
			complain(exp + ": flow.gamma must be set to a positive kernel gap");
	} catch (const std::exception& e) {
		complain(e.what());
	}

	if (exp == "lppl-decay" && model != "local_perturbation")
		complain("lppl-decay requires model.name = local_perturbation");
	if (exp == "symmetry-check" && cfg.flag("sym.translation", true) && boundary != "periodic")
		complain("symmetry-check: translation covariance needs boundary = periodic");
	if (exp == "lr-cone-tau" || exp == "lr-cone-alpha") {
		const std::string key = (exp == "lr-cone-tau" ? "tau" : "alpha") + std::string(".b_sites");
		if (cfg.has(key)) {
			try {
				if (cfg.list(key).empty()) complain(key + ": empty pair grid");
			} catch (const std::exception& e) {
				complain(e.what());
			}
		}
	}
	if (exp == "volume-convergence") {
		try {
			const auto sizes = int_list(cfg, "volumes.sizes", {4, 6, 8, 10, 12});
			if (sizes.size() < 2) complain("volumes.sizes: need at least two");
			for (size_t i = 0; i + 1 < sizes.size(); ++i)
				if (sizes[i + 1] <= sizes[i]) complain("volumes.sizes: must be ascending");
			for (int sz : sizes)
				if (sz < 2 || sz > L || ((L - sz) % 2) != 0)
					complain("volumes.sizes: centered interval " + std::to_string(sz) +
					         " does not fit the chain");
		} catch (const std::exception& e) {
			complain(e.what());
		}
	}
	return out;
}

RunRecord run_experiment(const Config& cfg) {
	const auto t0 = std::chrono::steady_clock::now();
	const std::string exp = cfg.get("experiment");
	RunRecord rec;
	rec.experiment = exp;
	for (const auto& [k, v] : cfg.values)
		if (k != "experiment") rec.metadata.emplace_back(k, v);

	if (exp == "kernel-constants") run_kernel_constants(cfg, rec);
	else if (exp == "flow-transport") run_flow_transport(cfg, rec);
	else if (exp == "lppl-decay") run_lppl_decay(cfg, rec);
	else if (exp == "psi-decay") run_psi_decay(cfg, rec);
	else if (exp == "lr-cone-tau") run_lr_cone_tau(cfg, rec);
	else if (exp == "lr-cone-alpha") run_lr_cone_alpha(cfg, rec);
	else if (exp == "delta-bounds") run_delta_bounds(cfg, rec);
	else if (exp == "volume-convergence") run_volume_convergence(cfg, rec);
	else if (exp == "symmetry-check") run_symmetry_check(cfg, rec);
	else throw std::invalid_argument("unknown experiment: " + exp);

	rec.elapsed_seconds =
	    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
	return rec;
}

void write_record(const RunRecord& rec, const std::string& outdir) {
	namespace fs = std::filesystem;
	std::error_code ec;
	fs::create_directories(outdir, ec);
	if (ec) throw std::runtime_error("cannot create output directory: " + outdir);

	for (const auto& table : rec.tables) {
		const fs::path path = fs::path(outdir) / (rec.experiment + "-" + table.name + ".csv");
		std::ofstream out(path);
		if (!out) throw std::runtime_error("cannot write " + path.string());
		out << std::setprecision(17);
		for (size_t i = 0; i < table.header.size(); ++i)
			out << (i ? "," : "") << table.header[i];
		out << "\n";
		for (const auto& row : table.rows) {
			for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
			out << "\n";
		}
	}

	const fs::path path = fs::path(outdir) / "summary.txt";
	std::ofstream out(path);
	if (!out) throw std::runtime_error("cannot write " + path.string());
	out << std::setprecision(17);
	out << "experiment = " << rec.experiment << "\n";
	for (const auto& [k, v] : rec.metadata) out << k << " = " << v << "\n";
	out << "\n";
	for (const auto& v : rec.verdicts)
		out << (v.pass ? "PASS" : "FAIL") << " " << v.check << " value=" << v.value
		    << " threshold=" << v.threshold << "\n";
	out << "\n# timing\nelapsed_seconds = " << rec.elapsed_seconds << "\n";
}

}  // namespace spectraflow

// ------------------------------------------------------------------- cli ---

#include "CLI11.hpp"

namespace spectraflow {

int cli_main(int argc, char** argv) {
	CLI::App app{"spectral flow verification harness"};
	app.require_subcommand(1);

	std::string config_path, outdir;
	int workers = 0;
	auto* run = app.add_subcommand("run", "execute an experiment config");
	run->add_option("config", config_path, "config file")->required();
	run->add_option("--out", outdir, "output directory override");
	run->add_option("--workers", workers, "parallel workers for sweep axes");
	auto* val = app.add_subcommand("validate", "static config checks only");
	val->add_option("config", config_path, "config file")->required();
	app.add_subcommand("list-experiments", "print the experiment names");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 2;
	}

	if (app.get_subcommand("list-experiments")->parsed()) {
		for (const auto& name : experiment_names()) std::cout << name << "\n";
		return 0;
	}

	try {
		Config cfg = load_config(config_path);
		if (workers > 0) cfg.values["run.workers"] = std::to_string(workers);
		if (!outdir.empty()) cfg.values["output.dir"] = outdir;

		const auto diags = validate_config(cfg);
		if (val->parsed()) {
			for (const auto& d : diags) std::cout << d << "\n";
			if (diags.empty()) std::cout << "ok\n";
			return diags.empty() ? 0 : 2;
		}
		if (!diags.empty()) {
			for (const auto& d : diags) std::cerr << d << "\n";
			return 2;
		}

		RunRecord rec = run_experiment(cfg);
		write_record(rec, cfg.get("output.dir", "runs/" + rec.experiment));
		for (const auto& v : rec.verdicts)
			std::cout << (v.pass ? "PASS" : "FAIL") << " " << v.check << " value=" << v.value
			          << " threshold=" << v.threshold << "\n";
		std::cout << "elapsed " << rec.elapsed_seconds << " s\n";
		return rec.all_pass() ? 0 : 1;
	} catch (const GapClosed& e) {
		std::cerr << "gap closed: " << e.what() << "\n";
		return 3;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	}
}

}  // namespace spectraflow
