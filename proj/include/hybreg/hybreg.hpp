#pragma once

#include "hybreg/errors.hpp"
#include "hybreg/random.hpp"
#include "hybreg/operators.hpp"
#include "hybreg/dense_kernels.hpp"
#include "hybreg/bidiag.hpp"
#include "hybreg/lsqr.hpp"
#include "hybreg/solvers.hpp"
#include "hybreg/problems.hpp"
#include "hybreg/metrics.hpp"
#include "hybreg/hybrid.hpp"
#include "hybreg/harness.hpp"
#include "hybreg/verify.hpp"
