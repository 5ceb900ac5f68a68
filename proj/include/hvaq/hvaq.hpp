#pragma once

#include "hvaq/calibration.hpp"
#include "hvaq/csv.hpp"
#include "hvaq/dataset_io.hpp"
#include "hvaq/error.hpp"
#include "hvaq/experiment.hpp"
#include "hvaq/geo.hpp"
#include "hvaq/haze_features.hpp"
#include "hvaq/image.hpp"
#include "hvaq/image_io.hpp"
#include "hvaq/random.hpp"
#include "hvaq/regressors/ensembles.hpp"
#include "hvaq/regressors/feature_matrix.hpp"
#include "hvaq/regressors/model.hpp"
#include "hvaq/regressors/svr.hpp"
#include "hvaq/regressors/tree.hpp"
#include "hvaq/spatial_stats.hpp"
#include "hvaq/synthetic.hpp"
