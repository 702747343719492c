#pragma once

#include "dhlab/catalog.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/grid.hpp"
#include "dhlab/identity.hpp"
#include "dhlab/lattice.hpp"
#include "dhlab/model.hpp"
#include "dhlab/polyfit.hpp"
#include "dhlab/polynomial.hpp"
#include "dhlab/pushforward.hpp"
#include "dhlab/reduction.hpp"
#include "dhlab/sampling.hpp"
#include "dhlab/smith.hpp"
#include "dhlab/verify.hpp"
#include "dhlab/fiber_integration.hpp"
