#pragma once

// Umbrella header.

#include "vizscore/core.hpp"
#include "vizscore/evalsuite.hpp"
#include "vizscore/io.hpp"
#include "vizscore/labeler.hpp"
#include "vizscore/lexicon.hpp"
#include "vizscore/model.hpp"
#include "vizscore/objective.hpp"
#include "vizscore/tokenize.hpp"
#include "vizscore/trainer.hpp"
#include "vizscore/types.hpp"
