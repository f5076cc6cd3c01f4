#include "spectraflow/models.hpp"

#include <stdexcept>

namespace spectraflow {

static InteractionTerm constant_term(SiteSet support, MatrixXc M) {
	const long dim = 1L << support.size();
	MatrixXc zero = MatrixXc::Zero(dim, dim);
	InteractionTerm t;
	t.support = std::move(support);
	t.op = [M = std::move(M)](double) { return M; };
	t.d_op = [zero = std::move(zero)](double) { return zero; };
	t.has_derivative = true;
	return t;
}

static std::vector<std::pair<int, int>> chain_bonds(int L, bool periodic) {
	std::vector<std::pair<int, int>> bonds;
	for (int i = 0; i + 1 < L; ++i) bonds.push_back({i, i + 1});
	if (periodic && L > 2) bonds.push_back({0, L - 1});
	return bonds;
}

Interaction tfim_family(int L, bool periodic, ScalarPath h, ScalarPath dh) {
	if (L < 2) throw std::invalid_argument("tfim_family: L >= 2 required");
	MetricGraph g = periodic ? MetricGraph::periodic_chain(L) : MetricGraph::chain(L);
	Interaction phi{std::move(g), {}, {}, {}};

	const MatrixXc zz = -kron(pauli('z'), pauli('z'));
	const auto bonds = chain_bonds(L, periodic);
	for (auto [i, j] : bonds) phi.terms.push_back(constant_term({i, j}, zz));

	const MatrixXc x1 = pauli('x');
	for (int i = 0; i < L; ++i) {
		InteractionTerm t;
		t.support = {i};
		t.op = [h, x1](double s) { return MatrixXc(-h(s) * x1); };
		t.d_op = [dh, x1](double s) { return MatrixXc(-dh(s) * x1); };
		t.has_derivative = true;
		phi.terms.push_back(std::move(t));
	}

	phi.pauli_view = [L, bonds, h](double s) {
		std::vector<PauliTerm> v;
		for (auto [i, j] : bonds) v.push_back({-1.0, {{i, 'z'}, {j, 'z'}}});
		for (int i = 0; i < L; ++i) v.push_back({-h(s), {{i, 'x'}}});
		return v;
	};
	phi.d_pauli_view = [L, dh](double s) {
		std::vector<PauliTerm> v;
		for (int i = 0; i < L; ++i) v.push_back({-dh(s), {{i, 'x'}}});
		return v;
	};
	return phi;
}

Interaction tfim_family(int L, bool periodic, double h0, double h1) {
	const double slope = h1 - h0;
	return tfim_family(
	    L, periodic, [h0, slope](double s) { return h0 + slope * s; },
	    [slope](double) { return slope; });
}

Interaction xy_family(int L, bool periodic, ScalarPath g, ScalarPath dg,
                      ScalarPath h, ScalarPath dh) {
	if (L < 2) throw std::invalid_argument("xy_family: L >= 2 required");
	MetricGraph gr = periodic ? MetricGraph::periodic_chain(L) : MetricGraph::chain(L);
	Interaction phi{std::move(gr), {}, {}, {}};

	const MatrixXc xx = kron(pauli('x'), pauli('x'));
	const MatrixXc yy = kron(pauli('y'), pauli('y'));
	const auto bonds = chain_bonds(L, periodic);
	for (auto [i, j] : bonds) {
		InteractionTerm t;
		t.support = {i, j};
		t.op = [g, xx, yy](double s) {
			return MatrixXc(-0.5 * (1.0 + g(s)) * xx - 0.5 * (1.0 - g(s)) * yy);
		};
		t.d_op = [dg, xx, yy](double s) { return MatrixXc(0.5 * dg(s) * (yy - xx)); };
		t.has_derivative = true;
		phi.terms.push_back(std::move(t));
	}
	const MatrixXc z1 = pauli('z');
	for (int i = 0; i < L; ++i) {
		InteractionTerm t;
		t.support = {i};
		t.op = [h, z1](double s) { return MatrixXc(-h(s) * z1); };
		t.d_op = [dh, z1](double s) { return MatrixXc(-dh(s) * z1); };
		t.has_derivative = true;
		phi.terms.push_back(std::move(t));
	}

	phi.pauli_view = [L, bonds, g, h](double s) {
		std::vector<PauliTerm> v;
		for (auto [i, j] : bonds) {
			v.push_back({-0.5 * (1.0 + g(s)), {{i, 'x'}, {j, 'x'}}});
			v.push_back({-0.5 * (1.0 - g(s)), {{i, 'y'}, {j, 'y'}}});
		}
		for (int i = 0; i < L; ++i) v.push_back({-h(s), {{i, 'z'}}});
		return v;
	};
	phi.d_pauli_view = [L, bonds, dg, dh](double s) {
		std::vector<PauliTerm> v;
		for (auto [i, j] : bonds) {
			v.push_back({-0.5 * dg(s), {{i, 'x'}, {j, 'x'}}});
			v.push_back({0.5 * dg(s), {{i, 'y'}, {j, 'y'}}});
		}
		for (int i = 0; i < L; ++i) v.push_back({-dh(s), {{i, 'z'}}});
		return v;
	};
	return phi;
}

Interaction local_perturbation_family(const Interaction& base, double s_star,
                                      const SiteSet& X, const MatrixXc& V,
                                      ScalarPath ramp, ScalarPath dramp) {
	if (V.rows() != V.cols() || V.rows() != (1L << X.size()))
		throw std::invalid_argument("local_perturbation_family: V dimension mismatch");
	if ((V - V.adjoint()).norm() > 1e-12 * std::max(1.0, V.norm()))
		throw std::invalid_argument("local_perturbation_family: V not Hermitian");

	Interaction out{base.graph, {}, {}, {}};
	for (const auto& t : base.terms)
		out.terms.push_back(constant_term(t.support, t.op(s_star)));

	InteractionTerm p;
	p.support = X;
	p.op = [ramp, V](double s) { return MatrixXc(ramp(s) * V); };
	p.d_op = [dramp, V](double s) { return MatrixXc(dramp(s) * V); };
	p.has_derivative = true;
	out.terms.push_back(std::move(p));
	return out;
}

}
