#pragma once

#include "ssqcqp/problem.hpp"
#include "ssqcqp/cone_qp.hpp"
#include "ssqcqp/direction.hpp"
#include "ssqcqp/linesearch.hpp"
#include "ssqcqp/solver.hpp"
#include "ssqcqp/flow.hpp"
#include "ssqcqp/bench.hpp"
#include "ssqcqp/report.hpp"
