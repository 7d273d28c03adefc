#pragma once

#include "pssmp/errors.hpp"
#include "pssmp/factorization.hpp"
#include "pssmp/io.hpp"
#include "pssmp/levy_model.hpp"
#include "pssmp/montecarlo.hpp"
#include "pssmp/quadrature.hpp"
#include "pssmp/reference_models.hpp"
#include "pssmp/series.hpp"
#include "pssmp/verification.hpp"
