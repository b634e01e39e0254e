#pragma once

#include "compatibility.hpp"
#include "control.hpp"
#include "dissipation.hpp"
#include "expression.hpp"
#include "history.hpp"
#include "load.hpp"
#include "parallel.hpp"
#include "qp.hpp"
#include "spatial.hpp"
#include "table.hpp"
#include "trajectory.hpp"
#include "verify.hpp"
#include "viscous.hpp"
#include "vv.hpp"
