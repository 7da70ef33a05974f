#pragma once

#include "fdrscca/asymptotics.hpp"
#include "fdrscca/core.hpp"
#include "fdrscca/errors.hpp"
#include "fdrscca/fdr_pipeline.hpp"
#include "fdrscca/random.hpp"
#include "fdrscca/scca.hpp"
#include "fdrscca/simulation.hpp"
#include "fdrscca/version.hpp"
