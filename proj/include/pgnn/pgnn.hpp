#pragma once

#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/eval.hpp"
#include "pgnn/matrix.hpp"
#include "pgnn/metrics.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/model_io.hpp"
#include "pgnn/optim.hpp"
#include "pgnn/physics.hpp"
#include "pgnn/pruning.hpp"
#include "pgnn/search.hpp"
#include "pgnn/synth.hpp"
#include "pgnn/train.hpp"
