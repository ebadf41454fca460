#pragma once

#include "jigsaw/bundle_io.hpp"
#include "jigsaw/common.hpp"
#include "jigsaw/compatibility.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/dnn_buddies.hpp"
#include "jigsaw/evaluation.hpp"
#include "jigsaw/ga.hpp"
#include "jigsaw/image.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/network.hpp"
#include "jigsaw/parallel.hpp"
#include "jigsaw/prng.hpp"
#include "jigsaw/puzzle.hpp"
