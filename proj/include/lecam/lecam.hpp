#pragma once

#include "lecam/blackscholes.hpp"
#include "lecam/errors.hpp"
#include "lecam/experiment.hpp"
#include "lecam/lan.hpp"
#include "lecam/lattice_market.hpp"
#include "lecam/payoff.hpp"
#include "lecam/pricing.hpp"
