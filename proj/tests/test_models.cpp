#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "spectraflow/interaction.hpp"
#include "spectraflow/models.hpp"

using namespace spectraflow;

static Eigen::VectorXd spectrum(const MatrixXc& H) {
	Eigen::SelfAdjointEigenSolver<MatrixXc> es(H, Eigen::EigenvaluesOnly);
	return es.eigenvalues();
}

TEST_CASE("term derivatives: analytic vs finite differences") {
	auto phi = tfim_family(4, false, [](double s) { return 1.0 + s * s; },
	                       [](double s) { return 2.0 * s; });
	for (const auto& t : phi.terms) {
		InteractionTerm fd = t;
		fd.has_derivative = false;
		fd.d_op = {};
		CHECK((term_derivative(t, 0.37) - term_derivative(fd, 0.37)).norm() < 1e-8);
	}

	InteractionTerm kink;
	kink.support = {0};
	kink.op = [](double s) { return MatrixXc(std::abs(s - 0.5) * pauli('x')); };
	CHECK_THROWS(term_derivative(kink, 0.5 + 2.5e-7));
}

TEST_CASE("tfim spectra") {
	auto ising = tfim_family(2, false, 0.0, 0.0);
	Eigen::VectorXd e0 = spectrum(hamiltonian(ising, 0.0));
	CHECK(e0(0) == doctest::Approx(-1.0));
	CHECK(e0(1) == doctest::Approx(-1.0));
	CHECK(e0(2) == doctest::Approx(1.0));
	CHECK(e0(3) == doctest::Approx(1.0));

	// char poly at h=1 factors as (x^2-1)(x^2-5)
	auto crit = tfim_family(2, false, 1.0, 1.0);
	Eigen::VectorXd e1 = spectrum(hamiltonian(crit, 0.5));
	CHECK(e1(0) == doctest::Approx(-std::sqrt(5.0)));
	CHECK(e1(1) == doctest::Approx(-1.0));
	CHECK(e1(2) == doctest::Approx(1.0));
	CHECK(e1(3) == doctest::Approx(std::sqrt(5.0)));

	auto para = tfim_family(8, false, 2.0, 2.0);
	Eigen::VectorXd e8 = spectrum(hamiltonian(para, 0.0));
	CHECK(e8(1) - e8(0) == doctest::Approx(2.1902471398840397));

	auto path = tfim_family(8, false, 1.5, 2.5);
	double min_gap = 1e300;
	for (int i = 0; i <= 10; ++i) {
		Eigen::VectorXd e = spectrum(hamiltonian(path, i / 10.0));
		min_gap = std::min(min_gap, e(1) - e(0));
	}
	CHECK(min_gap == doctest::Approx(1.2315475884907023));
	CHECK(min_gap > 0.9);
}

TEST_CASE("xy family") {
	auto one = [](double) { return 1.0; };
	auto zero = [](double) { return 0.0; };
	auto dimer = xy_family(2, false, zero, zero, zero, zero);
	Eigen::VectorXd e = spectrum(hamiltonian(dimer, 0.0));
	CHECK(e(0) == doctest::Approx(-1.0));
	CHECK(std::abs(e(1)) < 1e-12);
	CHECK(std::abs(e(2)) < 1e-12);
	CHECK(e(3) == doctest::Approx(1.0));

	// anisotropy 1 is the Ising chain in a rotated frame
	auto h13 = [](double) { return 1.3; };
	auto xy1 = xy_family(5, false, one, zero, h13, zero);
	auto tf = tfim_family(5, false, 1.3, 1.3);
	Eigen::VectorXd a = spectrum(hamiltonian(xy1, 0.0));
	Eigen::VectorXd b = spectrum(hamiltonian(tf, 0.0));
	CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);

	auto gapped = xy_family(6, false, one, zero,
	                        [](double s) { return 1.5 + s; }, one);
	double min_gap = 1e300;
	for (int i = 0; i <= 10; ++i) {
		Eigen::VectorXd ee = spectrum(hamiltonian(gapped, i / 10.0));
		min_gap = std::min(min_gap, ee(1) - ee(0));
	}
	CHECK(min_gap > 0.9);
}

TEST_CASE("pauli views agree with dense assembly") {
	auto tf = tfim_family(5, true, 1.5, 2.5);
	auto one = [](double) { return 1.0; };
	auto xy = xy_family(4, false, [](double s) { return 0.3 + 0.2 * s; }, [](double) { return 0.2; },
	                    [](double s) { return 1.0 + s; }, one);
	for (double s : {0.0, 0.3, 1.0}) {
		CHECK((dense_from_terms(tf.pauli_view(s), 5) - hamiltonian(tf, s)).norm() < 1e-12);
		CHECK((dense_from_terms(tf.d_pauli_view(s), 5) - d_hamiltonian(tf, s)).norm() < 1e-12);
		CHECK((dense_from_terms(xy.pauli_view(s), 4) - hamiltonian(xy, s)).norm() < 1e-12);
		CHECK((dense_from_terms(xy.d_pauli_view(s), 4) - d_hamiltonian(xy, s)).norm() < 1e-12);
	}
}

TEST_CASE("terms are hermitian") {
	auto one = [](double) { return 1.0; };
	auto xy = xy_family(4, false, [](double s) { return 0.3 + 0.2 * s; }, [](double) { return 0.2; },
	                    [](double s) { return 1.0 + s; }, one);
	for (const auto& t : xy.terms)
		for (double s : {0.0, 0.5, 1.0}) {
			MatrixXc M = t.op(s);
			CHECK((M - M.adjoint()).norm() < 1e-13);
		}
}

TEST_CASE("interaction norm: single bond and lemma bounds") {
	MetricGraph g = MetricGraph::chain(2);
	const double hval = 0.8;
	Interaction phi{g, {}, {}, {}};
	phi.terms.push_back({{0, 1}, [hval](double) { return MatrixXc(hval * kron(pauli('z'), pauli('z'))); }, {}, false});
	FFunction F = FFunction::polynomial(1.0);
	auto cert = interaction_norm(phi, F, uniform_grid(5));
	CHECK(cert.value == doctest::Approx(4.0 * hval));  // h / F(1)
	CHECK(cert.row_sum_max == doctest::Approx(hval));
	CHECK(cert.row_sum_max <= cert.f0_bound + 1e-12);
}

TEST_CASE("interaction norm: tfim vs brute-force enumeration") {
	const int L = 8;
	auto tf = tfim_family(L, false, 1.0, 1.0);
	FFunction Fa = FFunction::exp_weighted(1.0, 1.0);
	auto cert = interaction_norm(tf, Fa, uniform_grid(3));

	// independent enumeration: bond norm 1 at distance 1, site norm 1 at distance 0
	double best = 0.0;
	for (int x = 0; x < L; ++x)
		for (int y = x; y < L; ++y) {
			double acc = 0.0;
			for (int b = 0; b + 1 < L; ++b)
				if (x >= b && x <= b + 1 && y >= b && y <= b + 1) acc += 1.0;
			if (x == y) acc += 1.0;  // the site field h=1
			if (acc > 0.0) best = std::max(best, acc / Fa(double(y - x)));
		}
	CHECK(cert.value == doctest::Approx(best).epsilon(1e-12));
	CHECK(cert.refinement_delta < 1e-14);

	// absolute homogeneity
	Interaction scaled{tf.graph, {}, {}, {}};
	for (const auto& t : tf.terms) {
		InteractionTerm st = t;
		st.op = [t](double s) { return MatrixXc(2.5 * t.op(s)); };
		st.d_op = [t](double s) { return MatrixXc(2.5 * t.d_op(s)); };
		scaled.terms.push_back(std::move(st));
	}
	auto cert2 = interaction_norm(scaled, Fa, uniform_grid(3));
	CHECK(cert2.value == doctest::Approx(2.5 * cert.value));

	// global bound over the volume
	double total = 0.0;
	for (const auto& t : tf.terms) total += spectral_norm(t.op(0.0));
	CHECK(total <= cert.f0_bound * L + 1e-9);
}

TEST_CASE("d_interaction weights by support size") {
	MetricGraph g = MetricGraph::chain(3);
	MatrixXc V = kron(pauli('x'), pauli('z'));
	Interaction phi{g, {}, {}, {}};
	phi.terms.push_back({{0, 1}, [V](double s) { return MatrixXc(s * V); }, {}, false});
	auto dphi = d_interaction(phi);
	CHECK((dphi.terms[0].op(0.2) - 2.0 * V).norm() < 1e-7);
	CHECK((dphi.terms[0].op(0.9) - 2.0 * V).norm() < 1e-7);

	auto frozen = tfim_family(4, false, 1.5, 1.5);
	auto dfrozen = d_interaction(frozen);
	for (const auto& t : dfrozen.terms) CHECK(t.op(0.5).norm() < 1e-12);
}

TEST_CASE("local perturbation family") {
	auto base = tfim_family(6, false, 1.5, 2.5);
	MatrixXc V = pauli('x');
	auto pert = local_perturbation_family(base, 0.25, {3}, V,
	                                      [](double s) { return s; }, [](double) { return 1.0; });
	MatrixXc H0 = hamiltonian(base, 0.25);
	SiteSet vol = base.graph.all_sites();
	for (double s : {0.0, 0.4, 1.0}) {
		CHECK((hamiltonian(pert, s) - H0 - s * embed(V, {3}, vol)).norm() < 1e-12);
		CHECK((d_hamiltonian(pert, s) - embed(V, {3}, vol)).norm() < 1e-12);
	}

	auto still = local_perturbation_family(base, 0.25, {3}, V,
	                                       [](double) { return 0.0; }, [](double) { return 0.0; });
	CHECK((hamiltonian(still, 0.8) - H0).norm() < 1e-12);
	CHECK(d_hamiltonian(still, 0.8).norm() < 1e-12);

	MatrixXc bad = MatrixXc::Zero(2, 2);
	bad(0, 1) = cplx(0.0, 1.0);
	CHECK_THROWS(local_perturbation_family(base, 0.0, {3}, bad,
	                                       [](double s) { return s; }, [](double) { return 1.0; }));
}

TEST_CASE("volume restriction keeps inner terms only") {
	auto tf = tfim_family(4, false, 1.2, 1.2);
	auto inner = tfim_family(2, false, 1.2, 1.2);
	MatrixXc H12 = hamiltonian_on(tf, {1, 2}, 0.0);
	CHECK((H12 - hamiltonian(inner, 0.0)).norm() < 1e-13);
}
