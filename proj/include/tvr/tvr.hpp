#pragma once

#include "tvr/common.hpp"
#include "tvr/eval.hpp"
#include "tvr/feature_set.hpp"
#include "tvr/fisher.hpp"
#include "tvr/flow.hpp"
#include "tvr/gmm.hpp"
#include "tvr/metrics.hpp"
#include "tvr/pca.hpp"
#include "tvr/pipeline.hpp"
#include "tvr/svm.hpp"
#include "tvr/synthetic.hpp"
#include "tvr/tdp.hpp"
#include "tvr/ted.hpp"
#include "tvr/trajectory.hpp"
#include "tvr/tsp.hpp"
#include "tvr/video.hpp"
