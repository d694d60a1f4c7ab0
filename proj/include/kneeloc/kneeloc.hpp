#pragma once

// Umbrella header for the whole library.

#include "kneeloc/detector.hpp"
#include "kneeloc/formats.hpp"
#include "kneeloc/hog.hpp"
#include "kneeloc/image.hpp"
#include "kneeloc/image_io.hpp"
#include "kneeloc/linsvm.hpp"
#include "kneeloc/pgm.hpp"
#include "kneeloc/phantom.hpp"
#include "kneeloc/png_codec.hpp"
#include "kneeloc/proposer.hpp"
#include "kneeloc/rng.hpp"
#include "kneeloc/run_config.hpp"
#include "kneeloc/transforms.hpp"
