// vmisim.hpp: everything in one include

#pragma once

#include "vmisim/types.hpp"
#include "vmisim/core_model.hpp"
#include "vmisim/response.hpp"
#include "vmisim/fields.hpp"
#include "vmisim/geometry.hpp"
#include "vmisim/diagrams.hpp"
#include "vmisim/quadrature.hpp"
#include "vmisim/causal_chain.hpp"
#include "vmisim/signals.hpp"
#include "vmisim/cli_io.hpp"
