#pragma once

#include "rwpm/bench.hpp"
#include "rwpm/diffusion.hpp"
#include "rwpm/errors.hpp"
#include "rwpm/graph.hpp"
#include "rwpm/key_value.hpp"
#include "rwpm/lu.hpp"
#include "rwpm/matrix.hpp"
#include "rwpm/metrics.hpp"
#include "rwpm/partition.hpp"
#include "rwpm/pipeline.hpp"
#include "rwpm/scoring.hpp"
#include "rwpm/synth.hpp"
#include "rwpm/tensor_io.hpp"
