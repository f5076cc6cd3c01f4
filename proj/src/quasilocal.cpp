#include "spectraflow/quasilocal.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace spectraflow {

namespace {

MatrixXc hermitian_expi(const MatrixXc& H, double t) {
	SpectralData es = diagonalize(H);
	const Eigen::Index n = H.rows();
	VectorXc phases(n);
	for (Eigen::Index j = 0; j < n; ++j) phases(j) = std::exp(cplx(0.0, t * es.energies(j)));
	return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

void check_grid(const std::vector<double>& g, const char* who, size_t min_points) {
	if (g.size() < min_points)
		throw std::invalid_argument(std::string(who) + ": s grid has too few points");
	for (size_t i = 0; i + 1 < g.size(); ++i)
		if (!(g[i + 1] > g[i]))
			throw std::invalid_argument(std::string(who) + ": grid must be strictly ascending");
}

// positions of the ambient sites X inside the sorted volume
SiteSet local_labels(const SiteSet& X, const SiteSet& volume) {
	SiteSet out;
	out.reserve(X.size());
	for (int x : X) {
		const auto it = std::lower_bound(volume.begin(), volume.end(), x);
		if (it == volume.end() || *it != x)
			throw std::invalid_argument("local_labels: site outside the volume");
		out.push_back(static_cast<int>(it - volume.begin()));
	}
	return out;
}

// the per-support generator pieces D_Y = sigma-transform of Phi'_Y at one s;
// flip-even families (after relabeling the volume) run in parity blocks
std::vector<std::pair<SiteSet, MatrixXc>> generators_at(const Interaction& phi, const SiteSet& volume,
                                                        double s, const WeightKernel& kernel,
                                                        int first, int count, double gamma_min) {
	std::map<SiteSet, MatrixXc> grouped;
	for (const auto& t : phi.terms) {
		if (!is_subset(t.support, volume)) continue;
		MatrixXc dm = term_derivative(t, s);
		if (dm.isZero(0.0)) continue;
		auto [it, fresh] = grouped.try_emplace(t.support, dm);
		if (!fresh) it->second += dm;
	}
	std::vector<std::pair<SiteSet, MatrixXc>> out;
	if (grouped.empty()) return out;

	const int l_loc = static_cast<int>(volume.size());
	bool blocked_ok = true;
	std::vector<PauliTerm> hterms;
	for (const auto& t : phi.terms) {
		if (!is_subset(t.support, volume)) continue;
		for (auto& pt : pauli_decompose(term_matrix(t, s), local_labels(t.support, volume))) {
			if (!term_flip_even(pt)) {
				blocked_ok = false;
				break;
			}
			hterms.push_back(std::move(pt));
		}
		if (!blocked_ok) break;
	}
	std::vector<std::pair<SiteSet, std::vector<PauliTerm>>> dterms;
	if (blocked_ok)
		for (const auto& [Y, dm] : grouped) {
			auto dec = pauli_decompose(dm, local_labels(Y, volume));
			for (const auto& pt : dec)
				if (!term_flip_even(pt)) {
					blocked_ok = false;
					break;
				}
			if (!blocked_ok) break;
			dterms.emplace_back(Y, std::move(dec));
		}

	if (blocked_ok && !hterms.empty()) {
		SectorSpectralData sp = diagonalize_blocked(hterms, l_loc);
		track_sector(sp, first, count, gamma_min, s);
		if (kernel.gamma() > sp.gap * (1.0 + 1e-12))
			throw std::invalid_argument("build_psi: kernel gamma exceeds the tracked gap");
		const auto sigma = [&kernel](double de) { return kernel.sigma(de); };
		for (auto& [Y, dec] : dterms) {
			SectorBlocks Dt = to_eigenbasis(sp, flip_sector_blocks(dec, l_loc));
			apply_multiplier_in_eigenbasis(sp, Dt, sigma);
			MatrixXc D = sector_dense(from_eigenbasis(sp, Dt));
			out.emplace_back(Y, MatrixXc(0.5 * (D + D.adjoint())));
		}
		return out;
	}

	SpectralData sp = diagonalize(hamiltonian_on(phi, volume, s));
	track_sector(sp, first, count, gamma_min, s);
	for (const auto& [Y, dm] : grouped)
		out.emplace_back(Y, generator_D(sp, embed(dm, Y, volume), kernel));
	return out;
}

// distribute the fattening differences of one D_Y over the term map
void scatter_deltas(const MatrixXc& D, const SiteSet& Y, const MetricGraph& g, const SiteSet& volume,
                    size_t k, size_t n_grid, std::map<SiteSet, std::vector<MatrixXc>>& terms) {
	SiteSet prev_set;
	MatrixXc prev;
	for (int n = 0;; ++n) {
		SiteSet zn = set_intersection(g.fatten(Y, n), volume);
		LocalOperator cur = conditional_expectation(D, zn, volume);
		if (n == 0 || zn != prev_set) {
			MatrixXc delta = cur.matrix;
			if (n > 0) delta -= embed(prev, prev_set, zn);
			auto it = terms.find(zn);
			if (it == terms.end())
				it = terms.emplace(zn, std::vector<MatrixXc>(n_grid, MatrixXc::Zero(delta.rows(), delta.cols()))).first;
			it->second[k] += delta;
		}
		prev_set = std::move(zn);
		prev = std::move(cur.matrix);
		if (prev_set.size() == volume.size()) break;
	}
}

SiteSet pair_support(const std::vector<PauliTerm>& terms) {
	SiteSet out;
	for (const auto& t : terms) out = set_union(out, term_support(t));
	if (out.empty()) throw std::invalid_argument("lr measurement: observables need nonempty support");
	return out;
}

double pair_weight_sum(const MetricGraph& g, const SiteSet& X, const SiteSet& Y, const FFunction& F) {
	double s = 0.0;
	for (int x : X)
		for (int y : Y) s += F(g.distance(x, y));
	return s;
}

void count_violations(LRMeasurement& m) {
	for (size_t p = 0; p < m.values.size(); ++p)
		for (size_t i = 0; i < m.values[p].size(); ++i) {
			if (m.values[p][i] > m.envelopes[p][i] * (1.0 + 1e-9) + 1e-12) ++m.envelope_violations;
			if (m.values[p][i] > m.ceilings[p] * (1.0 + 1e-9) + 1e-12) ++m.ceiling_violations;
		}
}

// ||[U* A U, B]|| through implicit matvecs, nothing of size dim^2 formed
double conjugated_comm_norm(const SectorBlocks& U, const SectorBlocks& Ud, const SectorBlocks& A,
                            const SectorBlocks& Ad, const SectorBlocks& B, const SectorBlocks& Bd) {
	const long dim = 2 * U.b0.rows();
	auto C = [&](const VectorXc& x) { return sector_apply(Ud, sector_apply(A, sector_apply(U, x))); };
	auto Cd = [&](const VectorXc& x) { return sector_apply(Ud, sector_apply(Ad, sector_apply(U, x))); };
	auto K = [&](const VectorXc& x) { return VectorXc(C(sector_apply(B, x)) - sector_apply(B, C(x))); };
	auto Kd = [&](const VectorXc& x) {
		return VectorXc(sector_apply(Bd, Cd(x)) - Cd(sector_apply(Bd, x)));
	};
	auto KdK = [&](const VectorXc& x) { return Kd(K(x)); };
	return std::sqrt(std::max(0.0, lanczos_lambda_max(KdK, static_cast<int>(dim))));
}

}  // namespace

LRConstants lr_constants(const Interaction& phi, const FFunction& Fa,
                         const std::vector<double>& s_grid) {
	if (Fa.kind != FKind::exp_weighted || !(Fa.a > 0.0))
		throw std::invalid_argument("lr_constants: Fa must be exp weighted with a > 0");
	check_grid(s_grid, "lr_constants", 1);
	LRConstants c;
	c.a = Fa.a;
	c.nu = Fa.nu;
	c.cf = convolution_constant(Fa, phi.graph);
	c.f_norm = f_norm(FFunction::polynomial(Fa.nu), phi.graph);
	c.phi_norm = interaction_norm(phi, Fa, s_grid).value;
	if (!(c.phi_norm > 0.0)) throw std::invalid_argument("lr_constants: interaction norm vanishes");
	c.va = 2.0 * c.phi_norm * c.cf / c.a;
	c.ka = 2.0 / c.cf;
	return c;
}

double envelope_G(const WeightKernel& kernel, const LRConstants& c, double n) {
	if (n < 0.0) return kernel.norm_W1();
	if (!(c.va > 0.0) || !(c.a > 0.0))
		throw std::invalid_argument("envelope_G: constants not calibrated");
	const double xi = n / (2.0 * c.va);
	const double ibar = xi <= 0.0 ? 0.5 * kernel.norm_W1() : kernel.eval_I(xi);
	return 4.0 * ibar + (c.ka * c.f_norm / (c.a * c.va)) * std::exp(-0.5 * c.a * n);
}

double envelope_K(const WeightKernel& kernel, const LRConstants& c, double x) {
	if (!(c.va > 0.0) || !(c.a > 0.0))
		throw std::invalid_argument("envelope_K: constants not calibrated");
	const double xi = x / (2.0 * c.va);
	const double ibar = xi <= 0.0 ? 0.5 * kernel.norm_W1() : kernel.eval_I(xi);
	return 4.0 * ibar +
	       (c.ka * c.cf * c.phi_norm * c.f_norm / (c.a * c.a * c.va * c.va)) * std::exp(-0.5 * c.a * x);
}

double delta_bound(const WeightKernel& kernel, const LRConstants& c, double a_norm, int x_size,
                   int n) {
	return 2.0 * a_norm *
	       std::min(kernel.norm_W1(), x_size * envelope_G(kernel, c, static_cast<double>(n) - 1.0));
}

double delta_boundary_bound(const WeightKernel& kernel, const LRConstants& c, double a_norm,
                            int x_size, int n, double dist) {
	const double tail = std::sqrt(envelope_G(kernel, c, static_cast<double>(n) - 1.0) *
	                              envelope_K(kernel, c, dist));
	return 4.0 * a_norm * std::min(kernel.norm_W1(), x_size * tail);
}

LocalOperator delta_n(const MatrixXc& D_A, const SiteSet& X, const MetricGraph& g,
                      const SiteSet& volume, int n) {
	if (n < 0) throw std::invalid_argument("delta_n: negative order");
	if (X.empty() || !is_subset(X, volume))
		throw std::invalid_argument("delta_n: X must be a nonempty subset of the volume");
	const SiteSet zn = set_intersection(g.fatten(X, n), volume);
	LocalOperator cur = conditional_expectation(D_A, zn, volume);
	if (n == 0) return cur;
	const SiteSet zp = set_intersection(g.fatten(X, n - 1), volume);
	const LocalOperator prev = conditional_expectation(D_A, zp, volume);
	cur.matrix -= embed(prev.matrix, zp, zn);
	return cur;
}

LocalOperator delta_n(const SpectralData& spec, const LocalOperator& A, const WeightKernel& kernel,
                      const MetricGraph& g, const SiteSet& volume, int n) {
	const MatrixXc D_A = generator_D(spec, embed(A.matrix, A.support, volume), kernel);
	return delta_n(D_A, A.support, g, volume, n);
}

QuasiLocalInteraction build_psi(const Interaction& phi, const std::vector<double>& s_grid,
                                const WeightKernel& kernel, const LRConstants& c,
                                const SiteSet& volume, int sector_first, int sector_count,
                                double gamma_min) {
	check_grid(s_grid, "build_psi", 1);
	if (volume.empty()) throw std::invalid_argument("build_psi: empty volume");
	for (size_t j = 0; j < volume.size(); ++j)
		if (volume[j] < 0 || volume[j] >= phi.graph.size() || (j > 0 && volume[j] <= volume[j - 1]))
			throw std::invalid_argument("build_psi: volume must be a sorted site set on the graph");
	if (!(c.va > 0.0)) throw std::invalid_argument("build_psi: constants not calibrated");
	if (sector_count < 1) throw std::invalid_argument("build_psi: sector_count must be positive");

	QuasiLocalInteraction psi;
	psi.volume = volume;
	psi.s_grid = s_grid;
	psi.gamma = kernel.gamma();
	// mu = 2/7 - 1/7 - 1/14
	psi.f_psi = calibrate(FFunction::psi_weighted(c.nu, 1.0 / 14.0, kernel.gamma(), c.va), phi.graph);

	for (size_t k = 0; k < s_grid.size(); ++k) {
		auto dys = generators_at(phi, volume, s_grid[k], kernel, sector_first, sector_count, gamma_min);
		for (const auto& [Y, D] : dys)
			scatter_deltas(D, Y, phi.graph, volume, k, s_grid.size(), psi.terms);
	}
	for (const auto& [Z, mats] : psi.terms) {
		double worst = 0.0;
		for (const auto& mat : mats) worst = std::max(worst, spectral_norm(mat));
		psi.term_norms[Z] = worst;
	}
	double cert = 0.0;
	for (int x : volume)
		for (int y : volume) {
			double sum = 0.0;
			for (const auto& [Z, tn] : psi.term_norms)
				if (set_contains(Z, x) && set_contains(Z, y)) sum += tn;
			if (sum > 0.0) cert = std::max(cert, sum / psi.f_psi(phi.graph.distance(x, y)));
		}
	psi.norm_certificate = cert;
	return psi;
}

MatrixXc psi_sum(const QuasiLocalInteraction& psi, size_t k) {
	if (k >= psi.s_grid.size()) throw std::out_of_range("psi_sum: grid index out of range");
	const long dim = 1L << psi.volume.size();
	MatrixXc out = MatrixXc::Zero(dim, dim);
	for (const auto& [Z, mats] : psi.terms) out += embed(mats[k], Z, psi.volume);
	return out;
}

std::vector<std::pair<int, double>> psi_diameter_profile(const QuasiLocalInteraction& psi,
                                                         const MetricGraph& g) {
	std::map<int, double> by_diam;
	for (const auto& [Z, tn] : psi.term_norms) {
		auto [it, fresh] = by_diam.try_emplace(g.diameter(Z), tn);
		if (!fresh) it->second = std::max(it->second, tn);
	}
	return {by_diam.begin(), by_diam.end()};
}

double psi_flip_defect(const QuasiLocalInteraction& psi) {
	double worst = 0.0;
	for (const auto& [Z, mats] : psi.terms) {
		MatrixXc F = MatrixXc::Identity(1, 1);
		for (size_t j = 0; j < Z.size(); ++j) F = kron<cplx>(pauli('x'), F);
		for (const auto& mat : mats) worst = std::max(worst, commutator_norm(F, mat));
	}
	return worst;
}

double psi_translation_defect(const QuasiLocalInteraction& psi, const MetricGraph& g) {
	if (!g.is_periodic())
		throw std::invalid_argument("psi_translation_defect: periodic graph required");
	if (psi.volume != g.all_sites())
		throw std::invalid_argument("psi_translation_defect: full-volume build required");
	const int L = g.size();
	const long dim = 1L << L;
	std::vector<long> perm(static_cast<size_t>(dim));
	for (long b = 0; b < dim; ++b)
		perm[static_cast<size_t>(b)] = ((b << 1) & (dim - 1)) | (b >> (L - 1));
	double worst = 0.0;
	for (const auto& [Z, mats] : psi.terms) {
		SiteSet zs;
		for (int z : Z) zs.push_back((z + 1) % L);
		std::sort(zs.begin(), zs.end());
		const auto it = psi.terms.find(zs);
		for (size_t k = 0; k < mats.size(); ++k) {
			const MatrixXc A = embed(mats[k], Z, psi.volume);
			MatrixXc shifted(dim, dim);
			for (long i = 0; i < dim; ++i)
				for (long j = 0; j < dim; ++j)
					shifted(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]) = A(i, j);
			if (it != psi.terms.end()) shifted -= embed(it->second[k], zs, psi.volume);
			worst = std::max(worst, spectral_norm(shifted));
		}
	}
	return worst;
}

std::vector<MatrixXc> flow_from_psi(const QuasiLocalInteraction& psi, const SiteSet& lambda0,
                                    const std::vector<double>& s_grid) {
	check_grid(s_grid, "flow_from_psi", 2);
	if (lambda0.empty() || !is_subset(lambda0, psi.volume))
		throw std::invalid_argument("flow_from_psi: lambda0 must be a nonempty subset of the build volume");
	const long dim = 1L << lambda0.size();
	std::vector<MatrixXc> out;
	out.reserve(s_grid.size());
	MatrixXc U = MatrixXc::Identity(dim, dim);
	out.push_back(U);
	for (size_t i = 0; i + 1 < s_grid.size(); ++i) {
		const double sm = 0.5 * (s_grid[i] + s_grid[i + 1]);
		size_t k = psi.s_grid.size();
		for (size_t j = 0; j < psi.s_grid.size(); ++j)
			if (std::abs(psi.s_grid[j] - sm) <= 1e-12) {
				k = j;
				break;
			}
		if (k == psi.s_grid.size())
			throw std::invalid_argument("flow_from_psi: step midpoint is not on the psi grid");
		MatrixXc G = MatrixXc::Zero(dim, dim);
		for (const auto& [Z, mats] : psi.terms)
			if (is_subset(Z, lambda0)) G += embed(mats[k], Z, lambda0);
		U = (hermitian_expi(G, s_grid[i + 1] - s_grid[i]) * U).eval();
		out.push_back(U);
	}
	return out;
}

AlphaEnvelope alpha_envelope(const QuasiLocalInteraction& psi, const MetricGraph& g) {
	AlphaEnvelope env;
	env.psi_norm = psi.norm_certificate;
	env.f_psi = calibrate(psi.f_psi, g);
	env.conv = env.f_psi.conv_const;
	return env;
}

LRMeasurement lr_measure_tau(const SpectralData& spec, const MetricGraph& g,
                             const std::vector<LRPairSpec>& pairs, const std::vector<double>& t_grid,
                             const LRConstants& c, const FFunction& Fa) {
	if (pairs.empty() || t_grid.empty())
		throw std::invalid_argument("lr_measure_tau: empty pair or time list");
	const int L = g.size();
	LRMeasurement m;
	m.grid = t_grid;
	for (const auto& p : pairs) {
		const SiteSet X = pair_support(p.A), Y = pair_support(p.B);
		const MatrixXc A = dense_from_terms(p.A, L), B = dense_from_terms(p.B, L);
		const double na = spectral_norm(A), nb = spectral_norm(B);
		const double ceiling = 2.0 * na * nb;
		const double fsum = pair_weight_sum(g, X, Y, Fa);
		m.distances.push_back(g.distance(X, Y));
		m.ceilings.push_back(ceiling);
		std::vector<double> vals, envs;
		for (double t : t_grid) {
			vals.push_back(commutator_norm(heisenberg_evolve(spec, A, t), B));
			envs.push_back(std::min(ceiling, c.ka * na * nb * std::exp(c.a * c.va * std::abs(t)) * fsum));
		}
		m.values.push_back(std::move(vals));
		m.envelopes.push_back(std::move(envs));
	}
	count_violations(m);
	return m;
}

LRMeasurement lr_measure_tau_blocked(const SectorSpectralData& spec, const MetricGraph& g,
                                     const std::vector<LRPairSpec>& pairs,
                                     const std::vector<double>& t_grid, const LRConstants& c,
                                     const FFunction& Fa) {
	if (pairs.empty() || t_grid.empty())
		throw std::invalid_argument("lr_measure_tau: empty pair or time list");
	if (g.size() != spec.L) throw std::invalid_argument("lr_measure_tau: graph does not match L");
	LRMeasurement m;
	m.grid = t_grid;
	for (const auto& p : pairs) {
		const SiteSet X = pair_support(p.A), Y = pair_support(p.B);
		const SectorBlocks A = flip_sector_blocks(p.A, spec.L), B = flip_sector_blocks(p.B, spec.L);
		const double na = sector_norm(A), nb = sector_norm(B);
		const double ceiling = 2.0 * na * nb;
		const double fsum = pair_weight_sum(g, X, Y, Fa);
		m.distances.push_back(g.distance(X, Y));
		m.ceilings.push_back(ceiling);
		std::vector<double> vals, envs;
		for (double t : t_grid) {
			vals.push_back(sector_commutator_norm(heisenberg_evolve(spec, A, t), B));
			envs.push_back(std::min(ceiling, c.ka * na * nb * std::exp(c.a * c.va * std::abs(t)) * fsum));
		}
		m.values.push_back(std::move(vals));
		m.envelopes.push_back(std::move(envs));
	}
	count_violations(m);
	return m;
}

LRMeasurement lr_measure_alpha(const std::vector<MatrixXc>& unitaries,
                               const std::vector<double>& s_grid, const MetricGraph& g,
                               const std::vector<LRPairSpec>& pairs, const AlphaEnvelope& env) {
	if (pairs.empty() || unitaries.empty() || unitaries.size() != s_grid.size())
		throw std::invalid_argument("lr_measure_alpha: unitaries and grid must align");
	if (!(env.conv > 0.0)) throw std::invalid_argument("lr_measure_alpha: envelope not calibrated");
	const int L = g.size();
	LRMeasurement m;
	m.grid = s_grid;
	for (const auto& p : pairs) {
		const SiteSet X = pair_support(p.A), Y = pair_support(p.B);
		const MatrixXc A = dense_from_terms(p.A, L), B = dense_from_terms(p.B, L);
		const double na = spectral_norm(A), nb = spectral_norm(B);
		const double ceiling = 2.0 * na * nb;
		const int dist = g.distance(X, Y);
		const double fsum = pair_weight_sum(g, X, Y, env.f_psi);
		m.distances.push_back(dist);
		m.ceilings.push_back(ceiling);
		std::vector<double> vals, envs;
		for (size_t i = 0; i < s_grid.size(); ++i) {
			const MatrixXc As = unitaries[i].adjoint() * A * unitaries[i];
			vals.push_back(commutator_norm(As, B));
			double e = ceiling;
			if (dist > 0) {
				const double el = std::abs(s_grid[i] - s_grid.front());
				const double gs = std::expm1(2.0 * env.psi_norm * env.conv * el) / env.conv;
				e = ceiling * std::min(1.0, gs * fsum);
			}
			envs.push_back(e);
		}
		m.values.push_back(std::move(vals));
		m.envelopes.push_back(std::move(envs));
	}
	count_violations(m);
	return m;
}

LRMeasurement lr_measure_alpha_blocked(const std::vector<SectorBlocks>& unitaries,
                                       const std::vector<double>& s_grid, const MetricGraph& g,
                                       const std::vector<LRPairSpec>& pairs,
                                       const AlphaEnvelope& env) {
	if (pairs.empty() || unitaries.empty() || unitaries.size() != s_grid.size())
		throw std::invalid_argument("lr_measure_alpha: unitaries and grid must align");
	if (!(env.conv > 0.0)) throw std::invalid_argument("lr_measure_alpha: envelope not calibrated");
	const int L = g.size();
	LRMeasurement m;
	m.grid = s_grid;
	std::vector<SectorBlocks> As, Ads, Bs, Bds;
	for (const auto& p : pairs) {
		As.push_back(flip_sector_blocks(p.A, L));
		Ads.push_back(sector_adjoint(As.back()));
		Bs.push_back(flip_sector_blocks(p.B, L));
		Bds.push_back(sector_adjoint(Bs.back()));
		const SiteSet X = pair_support(p.A), Y = pair_support(p.B);
		m.distances.push_back(g.distance(X, Y));
		m.ceilings.push_back(2.0 * sector_norm(As.back()) * sector_norm(Bs.back()));
		m.values.emplace_back();
		m.envelopes.emplace_back();
	}
	for (size_t i = 0; i < s_grid.size(); ++i) {
		const SectorBlocks& U = unitaries[i];
		const SectorBlocks Ud = sector_adjoint(U);
		const double el = std::abs(s_grid[i] - s_grid.front());
		for (size_t pj = 0; pj < pairs.size(); ++pj) {
			m.values[pj].push_back(conjugated_comm_norm(U, Ud, As[pj], Ads[pj], Bs[pj], Bds[pj]));
			double e = m.ceilings[pj];
			if (m.distances[pj] > 0) {
				const double fsum =
				    pair_weight_sum(g, pair_support(pairs[pj].A), pair_support(pairs[pj].B), env.f_psi);
				const double gs = std::expm1(2.0 * env.psi_norm * env.conv * el) / env.conv;
				e = m.ceilings[pj] * std::min(1.0, gs * fsum);
			}
			m.envelopes[pj].push_back(e);
		}
	}
	count_violations(m);
	return m;
}

void validate_volume_sequence(const MetricGraph& g, const VolumeSequence& seq) {
	if (seq.volumes.size() < 2)
		throw std::invalid_argument("volume sequence: need at least two volumes");
	if (!(seq.b1 > 0.0) || !(seq.b2 > 0.0) || !(seq.p > 0.0))
		throw std::invalid_argument("volume sequence: b1, b2, p must be positive");
	for (size_t m = 0; m < seq.volumes.size(); ++m) {
		const SiteSet& v = seq.volumes[m];
		if (v.empty()) throw std::invalid_argument("volume sequence: empty volume");
		for (size_t j = 0; j < v.size(); ++j) {
			if (v[j] < 0 || v[j] >= g.size())
				throw std::invalid_argument("volume sequence: site outside the graph");
			if (j > 0 && v[j] <= v[j - 1])
				throw std::invalid_argument("volume sequence: volumes must be sorted site sets");
		}
		if (m > 0 && !(is_subset(seq.volumes[m - 1], v) && v.size() > seq.volumes[m - 1].size()))
			throw std::invalid_argument("volume sequence: volumes must be strictly nested");
		if (static_cast<double>(v.size()) > seq.b2 * std::pow(static_cast<double>(m + 1), seq.p) + 1e-9)
			throw std::invalid_argument("volume sequence: |Lambda_n| exceeds b2 n^p");
	}
	for (size_t m = 0; m < seq.volumes.size(); ++m)
		for (size_t n = m + 1; n < seq.volumes.size(); ++n) {
			const SiteSet comp = g.complement(seq.volumes[n]);
			if (comp.empty()) continue;
			if (static_cast<double>(g.distance(seq.volumes[m], comp)) <
			    seq.b1 * static_cast<double>(n - m) - 1e-9)
				throw std::invalid_argument("volume sequence: separation below b1 (n - m)");
		}
}

std::vector<MatrixXc> flow_on_volume(const Interaction& phi, const SiteSet& volume,
                                     const FlowConfig& config) {
	check_grid(config.s_grid, "flow_on_volume", 2);
	if (volume.empty()) throw std::invalid_argument("flow_on_volume: empty volume");
	if (!(config.gamma > 0.0))
		throw std::invalid_argument("flow_on_volume: gamma must be set explicitly");
	const WeightKernel kernel(config.gamma, config.kernel_terms);
	const auto& grid = config.s_grid;
	const long dim = 1L << volume.size();
	std::vector<MatrixXc> out;
	out.reserve(grid.size());
	MatrixXc U = MatrixXc::Identity(dim, dim);
	out.push_back(U);
	for (size_t i = 0; i + 1 < grid.size(); ++i) {
		const double sm = 0.5 * (grid[i] + grid[i + 1]);
		SpectralData sp = diagonalize(hamiltonian_on(phi, volume, sm));
		track_sector(sp, config.sector_first, config.sector_count, config.gamma_min, sm);
		const MatrixXc D = generator_D(sp, d_hamiltonian_on(phi, volume, sm), kernel);
		U = (hermitian_expi(D, grid[i + 1] - grid[i]) * U).eval();
		out.push_back(U);
	}
	return out;
}

VolumeTable volume_convergence(const Interaction& phi, const VolumeSequence& seq,
                               const LocalOperator& A, const FlowConfig& config,
                               const LRConstants& c) {
	validate_volume_sequence(phi.graph, seq);
	check_grid(config.s_grid, "volume_convergence", 2);
	if (!(config.gamma > 0.0))
		throw std::invalid_argument("volume_convergence: gamma must be set explicitly");
	if (A.support.empty() || !is_subset(A.support, seq.volumes.front()))
		throw std::invalid_argument("volume_convergence: observable must live inside the smallest volume");
	const size_t M = seq.volumes.size();
	std::vector<std::vector<MatrixXc>> flows(M);
	for (size_t m = 0; m < M; ++m) flows[m] = flow_on_volume(phi, seq.volumes[m], config);

	VolumeTable table;
	for (size_t m = 0; m + 1 < M; ++m) {
		const SiteSet& small = seq.volumes[m];
		const SiteSet& big = seq.volumes[m + 1];
		const MatrixXc as0 = embed(A.matrix, A.support, small);
		const MatrixXc ab0 = embed(A.matrix, A.support, big);
		double worst = 0.0;
		for (size_t i = 0; i < config.s_grid.size(); ++i) {
			const MatrixXc as = flows[m][i].adjoint() * as0 * flows[m][i];
			const MatrixXc ab = flows[m + 1][i].adjoint() * ab0 * flows[m + 1][i];
			worst = std::max(worst, spectral_norm(embed(as, small, big) - ab));
		}
		table.delta.push_back(worst);
	}

	const WeightKernel kernel(config.gamma, config.kernel_terms);
	std::vector<QuasiLocalInteraction> psis;
	psis.reserve(M);
	for (size_t m = 0; m < M; ++m)
		psis.push_back(build_psi(phi, config.s_grid, kernel, c, seq.volumes[m], config.sector_first,
		                         config.sector_count, config.gamma_min));
	auto pair_diff = [&](size_t m, const SiteSet& Z) {
		const auto ia = psis[m].terms.find(Z);
		const auto ib = psis[m + 1].terms.find(Z);
		double diff = 0.0;
		for (size_t k = 0; k < config.s_grid.size(); ++k) {
			const long dim = 1L << Z.size();
			MatrixXc d = MatrixXc::Zero(dim, dim);
			if (ib != psis[m + 1].terms.end()) d = ib->second[k];
			if (ia != psis[m].terms.end()) d -= ia->second[k];
			diff = std::max(diff, spectral_norm(d));
		}
		return diff;
	};

	for (size_t m = 0; m + 1 < M; ++m) {
		const SiteSet& small = seq.volumes[m];
		const SiteSet comp = phi.graph.complement(small);
		std::map<int, double> col;
		auto consider = [&](const SiteSet& Z) {
			if (!is_subset(Z, small)) return;
			const double diff = pair_diff(m, Z);
			const int dist = comp.empty() ? 0 : phi.graph.distance(Z, comp);
			auto [it, fresh] = col.try_emplace(dist, diff);
			if (!fresh) it->second = std::max(it->second, diff);
		};
		for (const auto& [Z, mats] : psis[m].terms) consider(Z);
		for (const auto& [Z, mats] : psis[m + 1].terms)
			if (psis[m].terms.find(Z) == psis[m].terms.end()) consider(Z);
		table.psi_delta.emplace_back(col.begin(), col.end());
	}

	// fixed inner observables: one increment column per Z across the pairs
	std::set<SiteSet> inner;
	for (const auto& psi : psis)
		for (const auto& [Z, mats] : psi.terms)
			if (is_subset(Z, seq.volumes.front())) inner.insert(Z);
	for (const auto& Z : inner) {
		std::vector<double> column;
		for (size_t m = 0; m + 1 < M; ++m) column.push_back(pair_diff(m, Z));
		table.psi_delta_inner.emplace(Z, std::move(column));
	}
	return table;
}

}
