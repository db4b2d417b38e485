#pragma once

#include "crlm/radiomics/extract.hpp"
#include "crlm/radiomics/first_order.hpp"
#include "crlm/radiomics/normalize.hpp"
#include "crlm/radiomics/preprocess.hpp"
#include "crlm/radiomics/shape.hpp"
#include "crlm/radiomics/texture.hpp"
