#pragma once

#include "crlm/pipeline/completion.hpp"
#include "crlm/pipeline/config.hpp"
#include "crlm/pipeline/cv.hpp"
#include "crlm/pipeline/digest.hpp"
#include "crlm/pipeline/jobs.hpp"
#include "crlm/pipeline/png.hpp"
#include "crlm/pipeline/prompts.hpp"
#include "crlm/pipeline/reports.hpp"
#include "crlm/pipeline/run.hpp"
#include "crlm/pipeline/server.hpp"
#include "crlm/pipeline/simulate.hpp"
