#pragma once

#include "koopman/dictionary.hpp"
#include "koopman/edmd.hpp"
#include "koopman/errors.hpp"
#include "koopman/numerics.hpp"
#include "koopman/ssd.hpp"
#include "koopman/systems.hpp"
