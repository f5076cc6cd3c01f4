#include "spectraflow/spectral_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace spectraflow {

MatrixXc generator_D(const SpectralData& spec, const MatrixXc& Hprime, const WeightKernel& kernel) {
	if (!spec.interval_set) throw std::logic_error("generator_D: track a sector first");
	if (Hprime.rows() != spec.energies.size() || Hprime.cols() != spec.energies.size())
		throw std::invalid_argument("generator_D: dimension mismatch");
	if (kernel.gamma() > spec.gap * (1.0 + 1e-12))
		throw std::invalid_argument("generator_D: kernel gamma exceeds the tracked gap");
	MatrixXc D = multiplier_transform(spec, Hprime, [&kernel](double de) { return kernel.sigma(de); });
	return ((D + D.adjoint().eval()) / 2.0).eval();
}

namespace {

void check_grid(const std::vector<double>& g) {
	if (g.size() < 2) throw std::invalid_argument("flow: s_grid needs at least two points");
	for (size_t i = 0; i + 1 < g.size(); ++i)
		if (!(g[i + 1] > g[i])) throw std::invalid_argument("flow: s_grid must be strictly ascending");
}

std::vector<double> halve(const std::vector<double>& g) {
	std::vector<double> out;
	out.reserve(2 * g.size() - 1);
	for (size_t i = 0; i + 1 < g.size(); ++i) {
		out.push_back(g[i]);
		out.push_back(0.5 * (g[i] + g[i + 1]));
	}
	out.push_back(g.back());
	return out;
}

// exp(i t H) for Hermitian H
MatrixXc hermitian_expi(const MatrixXc& H, double t) {
	SpectralData es = diagonalize(H);
	VectorXc phase(es.energies.size());
	for (long j = 0; j < phase.size(); ++j) phase(j) = std::exp(cplx(0.0, t * es.energies(j)));
	return es.vectors * phase.asDiagonal() * es.vectors.adjoint();
}

std::vector<VectorXc> window_vectors(const SpectralData& spec) {
	std::vector<VectorXc> out;
	out.reserve(spec.sector_dim);
	for (int j = 0; j < spec.sector_dim; ++j) out.push_back(spec.vectors.col(spec.sector_first + j));
	return out;
}

double min_gap_scan(const Interaction& phi, const FlowConfig& config) {
	double best = std::numeric_limits<double>::infinity();
	auto probe = [&](double s) {
		SpectralData sp = diagonalize(hamiltonian(phi, s));
		track_sector(sp, config.sector_first, config.sector_count, config.gamma_min, s);
		best = std::min(best, sp.gap);
	};
	const auto& g = config.s_grid;
	for (size_t i = 0; i < g.size(); ++i) {
		probe(g[i]);
		if (i + 1 < g.size()) probe(0.5 * (g[i] + g[i + 1]));
	}
	if (!std::isfinite(best) || best <= 0.0)
		throw std::invalid_argument("flow: set gamma explicitly, the scanned gap is not a finite positive number");
	return best;
}

struct Pass {
	std::vector<MatrixXc> unitaries;
	std::vector<double> residuals;
	std::vector<double> dnorms;
	std::vector<double> gaps;
};

Pass run_pass(const Interaction& phi, const std::vector<double>& grid, const FlowConfig& config,
              const WeightKernel& kernel) {
	Pass out;
	SpectralData sp0 = diagonalize(hamiltonian(phi, grid.front()));
	track_sector(sp0, config.sector_first, config.sector_count, config.gamma_min, grid.front());
	const auto p0 = window_vectors(sp0);
	const long dim = sp0.energies.size();
	MatrixXc U = MatrixXc::Identity(dim, dim);
	out.unitaries.push_back(U);
	out.residuals.push_back(0.0);
	out.gaps.push_back(sp0.gap);
	for (size_t i = 0; i + 1 < grid.size(); ++i) {
		const double ds = grid[i + 1] - grid[i];
		const double sm = 0.5 * (grid[i] + grid[i + 1]);
		SpectralData spm = diagonalize(hamiltonian(phi, sm));
		track_sector(spm, config.sector_first, config.sector_count, config.gamma_min, sm);
		MatrixXc D = generator_D(spm, d_hamiltonian(phi, sm), kernel);
		out.dnorms.push_back(spectral_norm(D));
		U = (hermitian_expi(D, ds) * U).eval();
		SpectralData spg = diagonalize(hamiltonian(phi, grid[i + 1]));
		track_sector(spg, config.sector_first, config.sector_count, config.gamma_min, grid[i + 1]);
		out.gaps.push_back(spg.gap);
		std::vector<VectorXc> moved;
		moved.reserve(p0.size());
		for (const auto& v : p0) moved.push_back(U * v);
		out.residuals.push_back(projector_distance(window_vectors(spg), moved));
		out.unitaries.push_back(U);
	}
	return out;
}

}  // namespace

FlowResult integrate_flow(const Interaction& phi, const FlowConfig& config) {
	check_grid(config.s_grid);
	if (config.sector_count < 1) throw std::invalid_argument("flow: sector_count must be positive");
	double gamma = config.gamma;
	if (gamma <= 0.0) gamma = 0.95 * min_gap_scan(phi, config);
	WeightKernel kernel(gamma, config.kernel_terms);

	std::vector<double> grid = config.s_grid;
	Pass pass = run_pass(phi, grid, config, kernel);
	int halvings = 0;
	double change = 0.0;
	if (config.step_tolerance > 0.0) {
		double prev = *std::max_element(pass.residuals.begin(), pass.residuals.end());
		bool converged = false;
		while (halvings < config.max_halvings) {
			grid = halve(grid);
			pass = run_pass(phi, grid, config, kernel);
			++halvings;
			const double cur = *std::max_element(pass.residuals.begin(), pass.residuals.end());
			change = std::abs(cur - prev);
			prev = cur;
			if (change < config.step_tolerance) {
				converged = true;
				break;
			}
		}
		if (!converged) {
			std::ostringstream msg;
			msg << "integrate_flow: max residual still moved by " << change << " (tolerance "
			    << config.step_tolerance << ") after " << halvings << " halvings";
			throw std::runtime_error(msg.str());
		}
	}

	FlowResult res;
	res.s_grid = config.s_grid;
	res.gamma = gamma;
	res.halvings = halvings;
	res.residual_change = change;
	const size_t stride = size_t{1} << halvings;
	for (size_t i = 0; i < config.s_grid.size(); ++i) {
		res.unitaries.push_back(pass.unitaries[i * stride]);
		res.transport_residuals.push_back(pass.residuals[i * stride]);
		res.gaps.push_back(pass.gaps[i * stride]);
	}
	for (size_t i = 0; i + 1 < config.s_grid.size(); ++i) {
		double worst = 0.0;
		for (size_t k = i * stride; k < (i + 1) * stride; ++k) worst = std::max(worst, pass.dnorms[k]);
		res.generator_norms.push_back(worst);
	}
	return res;
}

LocalOperator localized_generator(const SpectralData& spec, const LocalOperator& Hprime,
                                  const WeightKernel& kernel, const MetricGraph& g, int R) {
	if (R < 0) throw std::invalid_argument("localized_generator: negative radius");
	const SiteSet vol = g.all_sites();
	const MatrixXc hp = embed(Hprime.matrix, Hprime.support, vol);
	const MatrixXc D = generator_D(spec, hp, kernel);
	return conditional_expectation(D, g.fatten(Hprime.support, R), vol);
}

LpplResult lppl_experiment(const Interaction& perturbed, const SiteSet& X,
                           const std::vector<int>& R_list, const FlowConfig& config) {
	check_grid(config.s_grid);
	if (R_list.empty()) throw std::invalid_argument("lppl: empty R list");
	const MetricGraph& g = perturbed.graph;
	const SiteSet vol = g.all_sites();
	if (!is_subset(X, vol) || X.empty()) throw std::invalid_argument("lppl: X must be a nonempty site set");

	double gamma = config.gamma;
	if (gamma <= 0.0) gamma = 0.95 * min_gap_scan(perturbed, config);
	WeightKernel kernel(gamma, config.kernel_terms);

	LpplResult res;
	res.gamma = gamma;
	res.corollary_valid = (config.sector_first == 0 && config.sector_count == 1);
	if (!res.corollary_valid)
		res.warning = "observable shift omitted: the tracked window is not the simple ground state";

	struct Local {
		int R;
		SiteSet XR;
		MatrixXc V;
	};
	std::vector<Local> locals;
	for (int R : R_list) {
		if (R < 0) throw std::invalid_argument("lppl: negative R");
		SiteSet XR = g.fatten(X, R);
		const long d = long{1} << XR.size();
		locals.push_back({R, std::move(XR), MatrixXc::Identity(d, d)});
	}

	const auto& grid = config.s_grid;
	SpectralData sp0 = diagonalize(hamiltonian(perturbed, grid.front()));
	track_sector(sp0, config.sector_first, config.sector_count, config.gamma_min, grid.front());
	const auto p0 = window_vectors(sp0);
	VectorXc psi0;
	if (res.corollary_valid) psi0 = sp0.vectors.col(0);

	const long dim = sp0.energies.size();
	MatrixXc U = MatrixXc::Identity(dim, dim);
	for (size_t i = 0; i + 1 < grid.size(); ++i) {
		const double ds = grid[i + 1] - grid[i];
		const double sm = 0.5 * (grid[i] + grid[i + 1]);
		SpectralData spm = diagonalize(hamiltonian(perturbed, sm));
		track_sector(spm, config.sector_first, config.sector_count, config.gamma_min, sm);
		const MatrixXc D = generator_D(spm, d_hamiltonian(perturbed, sm), kernel);
		U = (hermitian_expi(D, ds) * U).eval();
		for (auto& lc : locals) {
			const LocalOperator DR = conditional_expectation(D, lc.XR, vol);
			lc.V = (hermitian_expi(DR.matrix, ds) * lc.V).eval();
		}
	}

	SpectralData sp1 = diagonalize(hamiltonian(perturbed, grid.back()));
	track_sector(sp1, config.sector_first, config.sector_count, config.gamma_min, grid.back());
	const auto p1 = window_vectors(sp1);
	VectorXc psi1;
	if (res.corollary_valid) psi1 = sp1.vectors.col(0);

	for (const auto& lc : locals) {
		LpplRow row;
		row.R = lc.R;
		const MatrixXc VR = embed(lc.V, lc.XR, vol);
		row.u_diff = spectral_norm(U - VR);
		std::vector<VectorXc> moved;
		moved.reserve(p0.size());
		for (const auto& v : p0) moved.push_back(VR * v);
		row.projector_residual = projector_distance(p1, moved);
		row.observable_shift = std::numeric_limits<double>::quiet_NaN();
		if (res.corollary_valid) {
			for (int x : vol)
				if (g.distance(SiteSet{x}, X) == lc.R + 1) {
					row.observable_site = x;
					break;
				}
			if (row.observable_site >= 0) {
				const MatrixXc A = embed(pauli('z'), {row.observable_site}, vol);
				row.observable_shift = std::abs(psi1.dot(A * psi1) - psi0.dot(A * psi0));
			}
		}
		res.rows.push_back(row);
	}
	return res;
}

namespace {

std::vector<VectorXc> window_vectors_blocked(const SectorSpectralData& spec) {
	const long h = spec.s0.energies.size();
	std::vector<VectorXc> out;
	out.reserve(spec.sector_dim);
	for (int j = 0; j < spec.sector_dim; ++j) {
		const auto& [sct, idx] = spec.order[spec.sector_first + j];
		VectorXc v = VectorXc::Zero(2 * h);
		if (sct == 0)
			v.head(h) = spec.s0.vectors.col(idx);
		else
			v.tail(h) = spec.s1.vectors.col(idx);
		out.push_back(std::move(v));
	}
	return out;
}

}  // namespace

SectorFlowResult integrate_flow_blocked(const Interaction& phi, const FlowConfig& config) {
	check_grid(config.s_grid);
	if (!phi.pauli_view || !phi.d_pauli_view)
		throw std::invalid_argument("blocked flow: the family does not expose Pauli views");
	if (config.gamma <= 0.0) throw std::invalid_argument("blocked flow: gamma must be set explicitly");
	const int L = phi.graph.size();
	WeightKernel kernel(config.gamma, config.kernel_terms);

	SectorFlowResult out;
	out.s_grid = config.s_grid;
	out.gamma = config.gamma;

	const auto& grid = config.s_grid;
	SectorSpectralData sp0 = diagonalize_blocked(phi.pauli_view(grid.front()), L);
	track_sector(sp0, config.sector_first, config.sector_count, config.gamma_min, grid.front());
	out.gaps.push_back(sp0.gap);
	const auto p0 = window_vectors_blocked(sp0);

	const long h = long{1} << (L - 1);
	SectorBlocks U{L, true, MatrixXc::Identity(h, h), MatrixXc::Identity(h, h)};
	out.unitaries.push_back(U);
	out.transport_residuals.push_back(0.0);

	const auto sigma = [&kernel](double de) { return kernel.sigma(de); };
	for (size_t i = 0; i + 1 < grid.size(); ++i) {
		const double ds = grid[i + 1] - grid[i];
		const double sm = 0.5 * (grid[i] + grid[i + 1]);
		SectorSpectralData spm = diagonalize_blocked(phi.pauli_view(sm), L);
		track_sector(spm, config.sector_first, config.sector_count, config.gamma_min, sm);
		if (kernel.gamma() > spm.gap * (1.0 + 1e-12))
			throw std::invalid_argument("blocked flow: kernel gamma exceeds the tracked gap");
		const SectorBlocks hp = flip_sector_blocks(phi.d_pauli_view(sm), L);
		if (!hp.even) throw std::invalid_argument("blocked flow: H' must be flip even");
		SectorBlocks Dt = to_eigenbasis(spm, hp);
		apply_multiplier_in_eigenbasis(spm, Dt, sigma);
		Dt.b0 = ((Dt.b0 + Dt.b0.adjoint().eval()) / 2.0).eval();
		Dt.b1 = ((Dt.b1 + Dt.b1.adjoint().eval()) / 2.0).eval();
		out.generator_norms.push_back(sector_norm(Dt));
		const SectorBlocks E{L, true, hermitian_expi(Dt.b0, ds), hermitian_expi(Dt.b1, ds)};
		U = sector_product(from_eigenbasis(spm, E), U);
		out.unitaries.push_back(U);

		SectorSpectralData spg = diagonalize_blocked(phi.pauli_view(grid[i + 1]), L);
		track_sector(spg, config.sector_first, config.sector_count, config.gamma_min, grid[i + 1]);
		out.gaps.push_back(spg.gap);
		std::vector<VectorXc> moved;
		moved.reserve(p0.size());
		for (const auto& v : p0) moved.push_back(sector_apply(U, v));
		out.transport_residuals.push_back(projector_distance(window_vectors_blocked(spg), moved));
	}
	return out;
}

}  // namespace spectraflow
