#pragma once

#include <string>

#include "spectraflow/interaction.hpp"
#include "spectraflow/spectral_engine.hpp"
#include "spectraflow/weight_kernel.hpp"

namespace spectraflow {

struct FlowConfig {
	std::vector<double> s_grid;  // ascending; the flow starts at s_grid.front()
	double gamma = 0.0;          // kernel gap; <= 0 scans the path and uses 0.95 * min gap
	int sector_first = 0;
	int sector_count = 1;
	double gamma_min = 0.0;       // tracked gap below this aborts with GapClosed
	double step_tolerance = 0.0;  // > 0 enables halving until the residual stabilizes
	int max_halvings = 6;
	int kernel_terms = 10000;
};

struct FlowResult {
	std::vector<double> s_grid;
	std::vector<MatrixXc> unitaries;          // U(s) at grid points, U(s_0) = 1
	std::vector<double> transport_residuals;  // ||P(s) - U P(0) U*||
	std::vector<double> generator_norms;      // ||D|| at step midpoints
	std::vector<double> gaps;                 // tracked gap at grid points
	double gamma = 0.0;                       // kernel gamma actually used
	int halvings = 0;
	double residual_change = 0.0;  // last refinement delta of the max residual
};

// D = multiplier sigma(E_col - E_row) applied to H' in the eigenbasis;
// requires a tracked interval with kernel.gamma() <= spec.gap
MatrixXc generator_D(const SpectralData& spec, const MatrixXc& Hprime, const WeightKernel& kernel);

// midpoint-exponential integration of -i dU/ds = D(s) U(s)
FlowResult integrate_flow(const Interaction& phi, const FlowConfig& config);

// Pi_{X_R}(D) for a perturbation supported on Hprime.support
LocalOperator localized_generator(const SpectralData& spec, const LocalOperator& Hprime,
                                  const WeightKernel& kernel, const MetricGraph& g, int R);

struct LpplRow {
	int R = 0;
	double u_diff = 0.0;
	double projector_residual = 0.0;
	double observable_shift = 0.0;  // NaN when the corollary is omitted
	int observable_site = -1;       // site at distance R+1 from X, -1 if none
};

struct LpplResult {
	std::vector<LpplRow> rows;
	bool corollary_valid = true;
	std::string warning;
	double gamma = 0.0;
};

// perturbed: family whose Phi' is supported on X (see local_perturbation_family)
LpplResult lppl_experiment(const Interaction& perturbed, const SiteSet& X,
                           const std::vector<int>& R_list, const FlowConfig& config);

// flip-blocked flow for even families exposing Pauli views; gamma must be set
struct SectorFlowResult {
	std::vector<double> s_grid;
	std::vector<SectorBlocks> unitaries;
	std::vector<double> transport_residuals;
	std::vector<double> generator_norms;
	std::vector<double> gaps;
	double gamma = 0.0;
};

SectorFlowResult integrate_flow_blocked(const Interaction& phi, const FlowConfig& config);

}
