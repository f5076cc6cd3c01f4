#pragma once

#include "spectraflow/interaction.hpp"

namespace spectraflow {

using ScalarPath = std::function<double(double)>;

// -sigma_z sigma_z on bonds, -h(s) sigma_x on sites
Interaction tfim_family(int L, bool periodic, ScalarPath h, ScalarPath dh);
Interaction tfim_family(int L, bool periodic, double h0, double h1);  // linear ramp

// -[(1+g(s))/2] sigma_x sigma_x - [(1-g(s))/2] sigma_y sigma_y - h(s) sigma_z
Interaction xy_family(int L, bool periodic, ScalarPath g, ScalarPath dg,
                      ScalarPath h, ScalarPath dh);

// base frozen at s_star plus ramp(s) * V on X; Phi' lives on X only
Interaction local_perturbation_family(const Interaction& base, double s_star,
                                      const SiteSet& X, const MatrixXc& V,
                                      ScalarPath ramp, ScalarPath dramp);

}
