#pragma once

// Bayesian empirical likelihood posteriors sampled with Hamiltonian Monte
// Carlo.  The inner weight problem is solved through its Lagrange dual;
// the analytic log-likelihood gradient diverges at the support boundary,
// which is what keeps the chains inside the feasible region.

#include "bayesel/dataset.hpp"
#include "bayesel/diagnostics.hpp"
#include "bayesel/el.hpp"
#include "bayesel/hmc.hpp"
#include "bayesel/io.hpp"
#include "bayesel/model.hpp"
#include "bayesel/posterior.hpp"
#include "bayesel/prior.hpp"
#include "bayesel/rng.hpp"
