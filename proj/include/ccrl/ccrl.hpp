#pragma once

#include "ccrl/candgen.hpp"
#include "ccrl/class_features.hpp"
#include "ccrl/core_data.hpp"
#include "ccrl/corpus_io.hpp"
#include "ccrl/eval.hpp"
#include "ccrl/gbm.hpp"
#include "ccrl/io.hpp"
#include "ccrl/logistic.hpp"
#include "ccrl/pipeline.hpp"
#include "ccrl/relevance.hpp"
#include "ccrl/synthetic.hpp"
