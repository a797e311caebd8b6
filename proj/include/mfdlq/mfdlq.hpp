#pragma once

#include "mfdlq/adjoint.hpp"
#include "mfdlq/certify.hpp"
#include "mfdlq/error.hpp"
#include "mfdlq/problem.hpp"
#include "mfdlq/problem_io.hpp"
#include "mfdlq/riccati.hpp"
#include "mfdlq/simulator.hpp"
#include "mfdlq/tree_oracle.hpp"
