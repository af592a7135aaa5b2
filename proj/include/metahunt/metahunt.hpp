#pragma once

#include "metahunt/basis_hunting.hpp"
#include "metahunt/conformal.hpp"
#include "metahunt/diagnostics.hpp"
#include "metahunt/errors.hpp"
#include "metahunt/function_space.hpp"
#include "metahunt/io.hpp"
#include "metahunt/linalg.hpp"
#include "metahunt/pipeline.hpp"
#include "metahunt/rng.hpp"
#include "metahunt/selection.hpp"
#include "metahunt/simplex.hpp"
#include "metahunt/simulation.hpp"
#include "metahunt/special_functions.hpp"
#include "metahunt/study.hpp"
#include "metahunt/weight_estimation.hpp"
#include "metahunt/weight_model.hpp"
