#pragma once

#include <map>
#include <vector>

#include "spectraflow/decay.hpp"
#include "spectraflow/interaction.hpp"
#include "spectraflow/spectral_engine.hpp"
#include "spectraflow/spectral_flow.hpp"
#include "spectraflow/weight_kernel.hpp"

namespace spectraflow {

// Certified constants of the static Lieb-Robinson envelope
//   ||[tau_t(A), B]|| <= ka ||A|| ||B|| e^{a va |t|} sum F_a(d(x,y)),
// with the conventions va = 2 ||Phi||_a C_{F_a} / a and ka = 2 / C_{F_a}.
struct LRConstants {
	double a = 0.0;         // exponential rate of F_a
	double nu = 1.0;        // polynomial order of the base F
	double phi_norm = 0.0;  // sup_s ||Phi(s)||_{F_a}
	double cf = 0.0;        // convolution constant of F_a on the graph
	double f_norm = 0.0;    // max_x sum_y F(d(x,y)) of the unweighted base F
	double va = 0.0;
	double ka = 0.0;
};

// Fa must be the exp_weighted kind; calibrates it on phi's graph.
LRConstants lr_constants(const Interaction& phi, const FFunction& Fa,
                         const std::vector<double>& s_grid);

// G(n) = 4 I_gamma(n/(2 va)) + (ka f_norm / (a va)) e^{-a n / 2}; by convention
// G(-1) = ||W_gamma||_1, and the I_gamma factor extends continuously to 0.
double envelope_G(const WeightKernel& kernel, const LRConstants& c, double n);
// K(x) = 4 I_gamma(x/(2 va)) + (ka cf phi_norm f_norm / (a va)^2) e^{-a x / 2}
double envelope_K(const WeightKernel& kernel, const LRConstants& c, double x);
// ||Delta^n(A)|| <= 2 ||A|| min[ ||W||_1, |X| G(n-1) ]
double delta_bound(const WeightKernel& kernel, const LRConstants& c, double a_norm,
                   int x_size, int n);
// ||Delta^n_Lambda - Delta^n_Gamma|| <= 4 ||A|| min[ ||W||_1, |X| sqrt(G(n-1) K(d)) ]
double delta_boundary_bound(const WeightKernel& kernel, const LRConstants& c, double a_norm,
                            int x_size, int n, double dist);

// Delta^n(A, s) at fixed s: conditional expectations of the transported
// observable integral D_A onto the fattened supports X_n = B_n(X) cap Lambda,
//   Delta^0 = Pi_{X_0}(D_A),  Delta^n = Pi_{X_n}(D_A) - Pi_{X_{n-1}}(D_A).
// spec must be the tracked eigensystem of H(s) on the volume.
LocalOperator delta_n(const MatrixXc& D_A, const SiteSet& X, const MetricGraph& g,
                      const SiteSet& volume, int n);
LocalOperator delta_n(const SpectralData& spec, const LocalOperator& A, const WeightKernel& kernel,
                      const MetricGraph& g, const SiteSet& volume, int n);

// The flow generator resolved into strictly local terms: D_Lambda(s) =
// sum_Z Psi(Z, s), each Psi(Z, s) supported on Z, with the decay certificate
//   ||Psi|| = sup_{x,y} (1 / F_Psi(d(x,y))) sum_{Z ni x,y} sup_s ||Psi(Z, s)||.
struct QuasiLocalInteraction {
	SiteSet volume;
	std::vector<double> s_grid;
	std::map<SiteSet, std::vector<MatrixXc>> terms;  // Z -> matrix per grid point
	std::map<SiteSet, double> term_norms;            // Z -> sup_s ||Psi(Z, s)||
	FFunction f_psi;                                 // calibrated psi_weighted envelope
	double norm_certificate = 0.0;
	double gamma = 0.0;
};

// Groups Delta^n(Phi'_Y, s) by the support Z = B_n(Y) cap volume. Flip-even
// families run in parity blocks; anything else takes the dense route.
QuasiLocalInteraction build_psi(const Interaction& phi, const std::vector<double>& s_grid,
                                const WeightKernel& kernel, const LRConstants& c,
                                const SiteSet& volume, int sector_first = 0, int sector_count = 1,
                                double gamma_min = 0.0);

// sum of all terms at grid index k, embedded in the build volume
MatrixXc psi_sum(const QuasiLocalInteraction& psi, size_t k);
// (diameter, max over Z of that diameter of sup_s ||Psi(Z, s)||), ascending
std::vector<std::pair<int, double>> psi_diameter_profile(const QuasiLocalInteraction& psi,
                                                         const MetricGraph& g);
// worst commutator norm of any term with the spin flip restricted to its support
double psi_flip_defect(const QuasiLocalInteraction& psi);
// worst covariance defect ||T Psi(Z) T* - Psi(Z+1)|| under the cyclic shift
double psi_translation_defect(const QuasiLocalInteraction& psi, const MetricGraph& g);

// midpoint-rule propagator generated by the terms inside lambda0; every step
// midpoint must be a grid value of psi
std::vector<MatrixXc> flow_from_psi(const QuasiLocalInteraction& psi, const SiteSet& lambda0,
                                    const std::vector<double>& s_grid);

// ----- Lieb-Robinson cone measurements -----
struct LRPairSpec {
	std::vector<PauliTerm> A, B;
};

struct LRMeasurement {
	std::vector<double> grid;                    // t or s values
	std::vector<int> distances;                  // d(supp A, supp B) per pair
	std::vector<double> ceilings;                // 2 ||A|| ||B|| per pair
	std::vector<std::vector<double>> values;     // [pair][grid point]
	std::vector<std::vector<double>> envelopes;  // [pair][grid point]
	int envelope_violations = 0;
	int ceiling_violations = 0;
};

LRMeasurement lr_measure_tau(const SpectralData& spec, const MetricGraph& g,
                             const std::vector<LRPairSpec>& pairs, const std::vector<double>& t_grid,
                             const LRConstants& c, const FFunction& Fa);
LRMeasurement lr_measure_tau_blocked(const SectorSpectralData& spec, const MetricGraph& g,
                                     const std::vector<LRPairSpec>& pairs,
                                     const std::vector<double>& t_grid, const LRConstants& c,
                                     const FFunction& Fa);

// envelope data for alpha_s = U(s)* (.) U(s): 2 ||A|| ||B|| min[1, g(s) sum F_Psi]
// with C g(s) = e^{2 ||Psi|| C |s|} - 1, C recalibrated on the measurement graph
struct AlphaEnvelope {
	double psi_norm = 0.0;
	double conv = 0.0;
	FFunction f_psi;
};
AlphaEnvelope alpha_envelope(const QuasiLocalInteraction& psi, const MetricGraph& g);

LRMeasurement lr_measure_alpha(const std::vector<MatrixXc>& unitaries,
                               const std::vector<double>& s_grid, const MetricGraph& g,
                               const std::vector<LRPairSpec>& pairs, const AlphaEnvelope& env);
LRMeasurement lr_measure_alpha_blocked(const std::vector<SectorBlocks>& unitaries,
                                       const std::vector<double>& s_grid, const MetricGraph& g,
                                       const std::vector<LRPairSpec>& pairs,
                                       const AlphaEnvelope& env);

// ----- finite-volume convergence -----
struct VolumeSequence {
	std::vector<SiteSet> volumes;  // strictly nested
	double b1 = 1.0;               // d(Lambda_m, Lambda_n^c) >= b1 (n - m)
	double b2 = 1.0;               // |Lambda_n| <= b2 n^p, n counted from 1
	double p = 1.0;
};
void validate_volume_sequence(const MetricGraph& g, const VolumeSequence& seq);

// dense flow of the family restricted to a volume; fixed grid, explicit gamma
std::vector<MatrixXc> flow_on_volume(const Interaction& phi, const SiteSet& volume,
                                     const FlowConfig& config);

struct VolumeTable {
	// delta[m] = max_s || alpha^{m+1}_s(A) - alpha^m_s(A) || on Lambda_{m+1}
	std::vector<double> delta;
	// per consecutive pair: (distance of Z to the smaller volume's boundary,
	// max_Z max_s ||Psi_{m+1}(Z) - Psi_m(Z)||), ascending in distance
	std::vector<std::vector<std::pair<int, double>>> psi_delta;
	// fixed Z inside the smallest volume: the same increment per pair index,
	// falling off as the boundary recedes from Z
	std::map<SiteSet, std::vector<double>> psi_delta_inner;
};
VolumeTable volume_convergence(const Interaction& phi, const VolumeSequence& seq,
                               const LocalOperator& A, const FlowConfig& config,
                               const LRConstants& c);

}
