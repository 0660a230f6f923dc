#pragma once

#include "bec/paramspace.hpp"
#include "bec/mesh.hpp"
#include "bec/initdata.hpp"
#include "bec/diagnostics.hpp"
#include "bec/solver.hpp"
#include "bec/oracles.hpp"
#include "bec/config.hpp"
#include "bec/runner.hpp"
