#pragma once

#include "spot/calibration.hpp"
#include "spot/corpus.hpp"
#include "spot/digest.hpp"
#include "spot/error.hpp"
#include "spot/eval_matrix.hpp"
#include "spot/model.hpp"
#include "spot/ngram.hpp"
#include "spot/remote.hpp"
#include "spot/run_config.hpp"
#include "spot/scoring.hpp"
#include "spot/types.hpp"
#include "spot/vocabulary.hpp"
