// Umbrella header.
#pragma once

#include "mfderive/rational.hpp"
#include "mfderive/symexpr.hpp"
#include "mfderive/lattice.hpp"
#include "mfderive/rate_parser.hpp"
#include "mfderive/taylor.hpp"
#include "mfderive/conserve.hpp"
#include "mfderive/sexp.hpp"
#include "mfderive/render.hpp"
#include "mfderive/model_io.hpp"
#include "mfderive/pipeline.hpp"
