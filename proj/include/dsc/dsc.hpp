#pragma once

#include "dsc/error.hpp"
#include "dsc/linalg.hpp"
#include "dsc/data_io.hpp"
#include "dsc/autoencoder.hpp"
#include "dsc/spectral.hpp"
#include "dsc/metrics.hpp"
#include "dsc/self_expressive.hpp"
#include "dsc/baselines.hpp"
#include "dsc/pipeline.hpp"
#include "dsc/report.hpp"
#include "dsc/checkpoint.hpp"
