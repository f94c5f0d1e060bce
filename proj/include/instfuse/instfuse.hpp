// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header: the full instance-fusion pipeline in one include.

#pragma once

#include "instfuse/affinity.hpp"
#include "instfuse/camera.hpp"
#include "instfuse/color.hpp"
#include "instfuse/config.hpp"
#include "instfuse/digest.hpp"
#include "instfuse/evaluation.hpp"
#include "instfuse/graph_segmentation.hpp"
#include "instfuse/io/frames.hpp"
#include "instfuse/io/pgm.hpp"
#include "instfuse/io/ply.hpp"
#include "instfuse/kdtree.hpp"
#include "instfuse/merging.hpp"
#include "instfuse/normals.hpp"
#include "instfuse/parallel.hpp"
#include "instfuse/pipeline.hpp"
#include "instfuse/point_cloud.hpp"
#include "instfuse/primitives.hpp"
#include "instfuse/synth.hpp"
