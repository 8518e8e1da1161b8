#pragma once

#include "smfb/errors.hpp"
#include "smfb/signal_model.hpp"
#include "smfb/ls_oracle.hpp"
#include "smfb/circular_lattice.hpp"
#include "smfb/lattice_engine.hpp"
#include "smfb/param_extractor.hpp"
#include "smfb/whitening.hpp"
#include "smfb/csv.hpp"
