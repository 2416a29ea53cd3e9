#pragma once

#include "lpmfe/config.hpp"
#include "lpmfe/equilibrium.hpp"
#include "lpmfe/error.hpp"
#include "lpmfe/flow.hpp"
#include "lpmfe/generator.hpp"
#include "lpmfe/grid.hpp"
#include "lpmfe/io.hpp"
#include "lpmfe/kernel.hpp"
#include "lpmfe/lp.hpp"
#include "lpmfe/model.hpp"
#include "lpmfe/simplex.hpp"
#include "lpmfe/simulate.hpp"
#include "lpmfe/stencil.hpp"

namespace lpmfe {

#ifdef LPMFE_VERSION
inline constexpr const char* version = LPMFE_VERSION;
#else
inline constexpr const char* version = "0.1.0";
#endif

} // namespace lpmfe
