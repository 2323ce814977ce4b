#pragma once

#include "rotorsim/core.hpp"
#include "rotorsim/encoding.hpp"
#include "rotorsim/io.hpp"
#include "rotorsim/model.hpp"
#include "rotorsim/noise.hpp"
#include "rotorsim/pipeline.hpp"
#include "rotorsim/sweep.hpp"
#include "rotorsim/validate.hpp"

namespace rotorsim {
inline constexpr const char* kVersion = "1.0.0";
}
