#pragma once

#include "crlm/samonai/costs.hpp"
#include "crlm/samonai/propagation.hpp"
