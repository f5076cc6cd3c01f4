#pragma once

#include <functional>
#include <vector>

#include "spectraflow/decay.hpp"
#include "spectraflow/metric_graph.hpp"
#include "spectraflow/operator_core.hpp"

namespace spectraflow {

// One term Phi_X(s); the matrix lives on the tensor factors of X only.
struct InteractionTerm {
	SiteSet support;
	std::function<MatrixXc(double)> op;
	std::function<MatrixXc(double)> d_op;  // empty unless has_derivative
	bool has_derivative = false;
};

// Parametrized interaction on a fixed finite graph. The optional Pauli view
// exposes H(s) as a real-coefficient Pauli sum for symmetry-adapted solvers.
struct Interaction {
	MetricGraph graph;
	std::vector<InteractionTerm> terms;
	std::function<std::vector<PauliTerm>(double)> pauli_view;
	std::function<std::vector<PauliTerm>(double)> d_pauli_view;
};

struct NormCertificate {
	double value = 0.0;             // ||Phi||_F over the s grid
	double refinement_delta = 0.0;  // change under one grid halving
	double row_sum_max = 0.0;       // max_x sum_{X ni x} sup_s ||Phi_X(s)||
	double f0_bound = 0.0;          // F(0) * value, dominates row_sum_max
};

MatrixXc term_matrix(const InteractionTerm& t, double s);
// analytic derivative when supplied, else central differences (step 1e-6)
// Richardson-extrapolated; inconsistent halved-step estimates throw.
MatrixXc term_derivative(const InteractionTerm& t, double s);

MatrixXc hamiltonian(const Interaction& phi, double s);
MatrixXc d_hamiltonian(const Interaction& phi, double s);
// restriction to terms with support inside the volume (ambient site labels)
MatrixXc hamiltonian_on(const Interaction& phi, const SiteSet& volume, double s);
MatrixXc d_hamiltonian_on(const Interaction& phi, const SiteSet& volume, double s);

std::vector<double> uniform_grid(int n_points);

NormCertificate interaction_norm(const Interaction& phi, const FFunction& F,
                                 const std::vector<double>& s_grid);

// the weighted family X -> |X| Phi'_X(s)
Interaction d_interaction(const Interaction& phi);

}
