#pragma once

#include "bounds.hpp"
#include "concentration.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "experiments.hpp"
#include "fock.hpp"
#include "ncpoly.hpp"
#include "numlin.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "wick.hpp"
