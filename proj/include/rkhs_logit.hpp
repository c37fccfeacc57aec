#pragma once

#include "rkhs_logit/errors.hpp"
#include "rkhs_logit/random.hpp"
#include "rkhs_logit/linalg.hpp"
#include "rkhs_logit/dataset.hpp"
#include "rkhs_logit/kernels.hpp"
#include "rkhs_logit/procsim.hpp"
#include "rkhs_logit/csv.hpp"
#include "rkhs_logit/simplex.hpp"
#include "rkhs_logit/firthglm.hpp"
#include "rkhs_logit/point_model.hpp"
#include "rkhs_logit/baselines.hpp"
#include "rkhs_logit/serialization.hpp"
#include "rkhs_logit/bench.hpp"
