#pragma once

// Umbrella header. config_io.hpp is left out because it needs the JSON header
// on the include path; include it explicitly where needed.

#include "covest/clt.hpp"
#include "covest/contour.hpp"
#include "covest/empirical_stieltjes.hpp"
#include "covest/ensemble.hpp"
#include "covest/error.hpp"
#include "covest/experiment.hpp"
#include "covest/limiting_spectrum.hpp"
#include "covest/mestre.hpp"
#include "covest/moment_inversion.hpp"
#include "covest/moments.hpp"
#include "covest/observation_io.hpp"
#include "covest/polynomial.hpp"
#include "covest/population_model.hpp"
#include "covest/random.hpp"
