#pragma once

#include "homsim/correlators.hpp"
#include "homsim/emitter.hpp"
#include "homsim/errors.hpp"
#include "homsim/inference.hpp"
#include "homsim/mat2.hpp"
#include "homsim/photon_mc.hpp"
#include "homsim/reference.hpp"
#include "homsim/tag_analysis.hpp"
#include "homsim/tag_stream.hpp"
