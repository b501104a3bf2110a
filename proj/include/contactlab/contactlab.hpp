#pragma once

#include "contactlab/chart.hpp"
#include "contactlab/expr.hpp"
#include "contactlab/forms.hpp"
#include "contactlab/structures.hpp"
#include "contactlab/ode.hpp"
#include "contactlab/turbulisation.hpp"
#include "contactlab/lutz.hpp"
#include "contactlab/report.hpp"
#include "contactlab/svg.hpp"
#include "contactlab/cli.hpp"
