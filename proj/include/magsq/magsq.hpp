#pragma once

#include "core.hpp"
#include "dynamics.hpp"
#include "effective.hpp"
#include "entanglement.hpp"
#include "linearize.hpp"
#include "liouvillian.hpp"
#include "parallel.hpp"
