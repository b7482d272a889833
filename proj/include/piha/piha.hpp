#pragma once

#include "piha/checker.hpp"
#include "piha/error.hpp"
#include "piha/flowpipe.hpp"
#include "piha/fwr.hpp"
#include "piha/geometry.hpp"
#include "piha/lp.hpp"
#include "piha/model.hpp"
#include "piha/model_file.hpp"
#include "piha/report.hpp"
#include "piha/sim.hpp"
#include "piha/trace_io.hpp"
