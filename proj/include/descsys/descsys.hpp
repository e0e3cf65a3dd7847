#pragma once

#include "descsys/errors.hpp"
#include "descsys/numerics.hpp"
#include "descsys/pencil.hpp"
#include "descsys/solution.hpp"
#include "descsys/stability.hpp"
#include "descsys/version.hpp"
