#pragma once

// Everything except the HTTP front end and the command line.

#include "hyperclean/cleanness.hpp"
#include "hyperclean/contract_io.hpp"
#include "hyperclean/emissions.hpp"
#include "hyperclean/extended_real.hpp"
#include "hyperclean/fairness.hpp"
#include "hyperclean/falsify.hpp"
#include "hyperclean/hr_systems.hpp"
#include "hyperclean/logic.hpp"
#include "hyperclean/oversight.hpp"
#include "hyperclean/piecewise.hpp"
#include "hyperclean/rng.hpp"
#include "hyperclean/trace_io.hpp"
#include "hyperclean/traces.hpp"
