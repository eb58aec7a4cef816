#pragma once

#include "pcd/benchmarks.hpp"
#include "pcd/conditioning.hpp"
#include "pcd/config.hpp"
#include "pcd/core.hpp"
#include "pcd/dataset_io.hpp"
#include "pcd/diffusion.hpp"
#include "pcd/error.hpp"
#include "pcd/indicators.hpp"
#include "pcd/pipeline.hpp"
#include "pcd/refdirs.hpp"
#include "pcd/reweighting.hpp"
#include "pcd/rng.hpp"
#include "pcd/sampler.hpp"
