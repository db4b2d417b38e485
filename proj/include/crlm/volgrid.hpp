#pragma once

#include "crlm/volgrid/components.hpp"
#include "crlm/volgrid/grid.hpp"
#include "crlm/volgrid/intensity.hpp"
#include "crlm/volgrid/io.hpp"
#include "crlm/volgrid/resample.hpp"
