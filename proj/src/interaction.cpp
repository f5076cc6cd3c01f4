#include "spectraflow/interaction.hpp"

#include <cmath>
#include <stdexcept>

namespace spectraflow {

MatrixXc term_matrix(const InteractionTerm& t, double s) { return t.op(s); }

MatrixXc term_derivative(const InteractionTerm& t, double s) {
	if (t.has_derivative) return t.d_op(s);
	const double h = 1e-6;
	MatrixXc d1 = (t.op(s + h) - t.op(s - h)) / (2.0 * h);
	MatrixXc d2 = (t.op(s + h / 2) - t.op(s - h / 2)) / h;
	const double mismatch = (d2 - d1).norm();
	if (mismatch > 1e-4 * (1.0 + d2.norm()))
		throw std::runtime_error("term_derivative: finite differences inconsistent, path not smooth");
	return (4.0 * d2 - d1) / 3.0;
}

static MatrixXc sum_terms(const Interaction& phi, const SiteSet& volume, double s, bool deriv) {
	const long dim = 1L << volume.size();
	MatrixXc H = MatrixXc::Zero(dim, dim);
	for (const auto& t : phi.terms) {
		if (!is_subset(t.support, volume)) continue;
		MatrixXc block = deriv ? term_derivative(t, s) : t.op(s);
		H += embed(block, t.support, volume);
	}
	return H;
}

MatrixXc hamiltonian(const Interaction& phi, double s) {
	return sum_terms(phi, phi.graph.all_sites(), s, false);
}

MatrixXc d_hamiltonian(const Interaction& phi, double s) {
	return sum_terms(phi, phi.graph.all_sites(), s, true);
}

MatrixXc hamiltonian_on(const Interaction& phi, const SiteSet& volume, double s) {
	return sum_terms(phi, volume, s, false);
}

MatrixXc d_hamiltonian_on(const Interaction& phi, const SiteSet& volume, double s) {
	return sum_terms(phi, volume, s, true);
}

std::vector<double> uniform_grid(int n_points) {
	if (n_points < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
	std::vector<double> g(n_points);
	for (int i = 0; i < n_points; ++i) g[i] = double(i) / (n_points - 1);
	return g;
}

static std::vector<double> halved_grid(const std::vector<double>& g) {
	std::vector<double> out;
	out.reserve(2 * g.size());
	for (size_t i = 0; i + 1 < g.size(); ++i) {
		out.push_back(g[i]);
		out.push_back(0.5 * (g[i] + g[i + 1]));
	}
	out.push_back(g.back());
	return out;
}

static double norm_on_grid(const Interaction& phi, const FFunction& F,
                           const std::vector<double>& grid, std::vector<double>* row_out) {
	const int n = phi.graph.size();
	std::vector<double> sup(phi.terms.size(), 0.0);
	for (size_t k = 0; k < phi.terms.size(); ++k)
		for (double s : grid) sup[k] = std::max(sup[k], spectral_norm(phi.terms[k].op(s)));

	std::vector<double> rows(n, 0.0);
	double best = 0.0;
	for (int x = 0; x < n; ++x) {
		for (int y = x; y < n; ++y) {
			double acc = 0.0;
			for (size_t k = 0; k < phi.terms.size(); ++k)
				if (set_contains(phi.terms[k].support, x) && set_contains(phi.terms[k].support, y))
					acc += sup[k];
			if (y == x) rows[x] = acc;
			if (acc == 0.0) continue;
			best = std::max(best, acc / F(phi.graph.distance(x, y)));
		}
	}
	if (row_out) *row_out = rows;
	return best;
}

NormCertificate interaction_norm(const Interaction& phi, const FFunction& F,
                                 const std::vector<double>& s_grid) {
	if (s_grid.empty()) throw std::invalid_argument("interaction_norm: empty s grid");
	NormCertificate cert;
	std::vector<double> rows;
	cert.value = norm_on_grid(phi, F, s_grid, &rows);
	cert.refinement_delta = std::abs(norm_on_grid(phi, F, halved_grid(s_grid), nullptr) - cert.value);
	for (double r : rows) cert.row_sum_max = std::max(cert.row_sum_max, r);
	cert.f0_bound = F(0.0) * cert.value;
	return cert;
}

Interaction d_interaction(const Interaction& phi) {
	Interaction out{phi.graph, {}, {}, {}};
	for (const auto& t : phi.terms) {
		const double w = double(t.support.size());
		InteractionTerm dt;
		dt.support = t.support;
		dt.op = [t, w](double s) { return MatrixXc(w * term_derivative(t, s)); };
		dt.d_op = {};
		dt.has_derivative = false;
		out.terms.push_back(std::move(dt));
	}
	return out;
}

}
