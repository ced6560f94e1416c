#pragma once

#include "pano/errors.hpp"
#include "pano/sphere.hpp"
#include "pano/tensor.hpp"
#include "pano/matrix.hpp"
#include "pano/remap.hpp"
#include "pano/priors.hpp"
#include "pano/spattention.hpp"
#include "pano/losses.hpp"
#include "pano/metrics.hpp"
#include "pano/random.hpp"
#include "pano/demo.hpp"
#include "pano/io/pfm.hpp"
#include "pano/io/json.hpp"
