#pragma once

#include "cvtrade/model.hpp"
#include "cvtrade/quadrature.hpp"
#include "cvtrade/profile.hpp"
#include "cvtrade/ensemble.hpp"
#include "cvtrade/tradeoff.hpp"
#include "cvtrade/rng.hpp"
#include "cvtrade/oracle.hpp"
#include "cvtrade/checks.hpp"
#include "cvtrade/config.hpp"
#include "cvtrade/io/csv.hpp"
#include "cvtrade/io/svg.hpp"
