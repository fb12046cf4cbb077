#pragma once

#include "ope/clustering.hpp"
#include "ope/csv.hpp"
#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/estimators.hpp"
#include "ope/harness.hpp"
#include "ope/json_io.hpp"
#include "ope/kernels.hpp"
#include "ope/matrix.hpp"
#include "ope/oracle.hpp"
#include "ope/policy.hpp"
#include "ope/random.hpp"
#include "ope/registry.hpp"
#include "ope/reward_model.hpp"
#include "ope/synthgen.hpp"
