#pragma once

#include "prr/bounds.hpp"
#include "prr/error.hpp"
#include "prr/exprfn.hpp"
#include "prr/mcsim.hpp"
#include "prr/recspec.hpp"
#include "prr/report.hpp"
#include "prr/rng.hpp"
