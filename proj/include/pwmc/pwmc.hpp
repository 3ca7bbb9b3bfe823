#pragma once

#include "pwmc/types.hpp"
#include "pwmc/network.hpp"
#include "pwmc/evaluate.hpp"
#include "pwmc/lp.hpp"
#include "pwmc/polytope.hpp"
#include "pwmc/pieces.hpp"
#include "pwmc/problem.hpp"
#include "pwmc/prox.hpp"
#include "pwmc/sampling.hpp"
#include "pwmc/audit.hpp"
#include "pwmc/descent.hpp"
#include "pwmc/ico.hpp"
#include "pwmc/fixtures.hpp"
#include "pwmc/io.hpp"
