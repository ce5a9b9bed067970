#pragma once

#include "iodetect/core.hpp"
#include "iodetect/scan_log.hpp"
#include "iodetect/distance.hpp"
#include "iodetect/fp_index.hpp"
#include "iodetect/clustering.hpp"
#include "iodetect/transition_graph.hpp"
#include "iodetect/node_features.hpp"
#include "iodetect/learner.hpp"
#include "iodetect/pipeline.hpp"
#include "iodetect/evaluation.hpp"
#include "iodetect/synth.hpp"
