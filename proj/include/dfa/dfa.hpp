#pragma once

#include "dfa/consensus.hpp"
#include "dfa/core.hpp"
#include "dfa/ibp.hpp"
#include "dfa/io.hpp"
#include "dfa/mf.hpp"
#include "dfa/predict.hpp"
#include "dfa/rng.hpp"
#include "dfa/sampler.hpp"
#include "dfa/simulate.hpp"
#include "dfa/stats.hpp"
#include "dfa/summarize.hpp"
