// dsgd.hpp — umbrella header.

#pragma once

#include "dsgd/bounds.hpp"
#include "dsgd/common.hpp"
#include "dsgd/config.hpp"
#include "dsgd/data.hpp"
#include "dsgd/engine.hpp"
#include "dsgd/experiment.hpp"
#include "dsgd/losses.hpp"
#include "dsgd/report.hpp"
#include "dsgd/stability.hpp"
#include "dsgd/topology.hpp"
#include "dsgd/verify.hpp"
