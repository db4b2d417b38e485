#pragma once

#include "crlm/survstats/cohort.hpp"
#include "crlm/survstats/concordance.hpp"
#include "crlm/survstats/cox.hpp"
#include "crlm/survstats/distributions.hpp"
#include "crlm/survstats/km.hpp"
#include "crlm/survstats/resampling.hpp"
#include "crlm/survstats/wilcoxon.hpp"
