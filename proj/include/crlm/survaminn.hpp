#pragma once

#include "crlm/survaminn/io.hpp"
#include "crlm/survaminn/losses.hpp"
#include "crlm/survaminn/model.hpp"
#include "crlm/survaminn/train.hpp"
