#pragma once

#include "trimshift/core.hpp"
#include "trimshift/csv.hpp"
#include "trimshift/dataset.hpp"
#include "trimshift/equivalence.hpp"
#include "trimshift/lasso.hpp"
#include "trimshift/matrix.hpp"
#include "trimshift/mean_shift.hpp"
#include "trimshift/parallel.hpp"
#include "trimshift/rng.hpp"
#include "trimshift/screening.hpp"
#include "trimshift/sparse_lts.hpp"
#include "trimshift/synthetic.hpp"
