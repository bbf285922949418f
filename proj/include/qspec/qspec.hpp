#pragma once

#include "qspec/series.hpp"
#include "qspec/linalg.hpp"
#include "qspec/quantile_regression.hpp"
#include "qspec/parallel.hpp"
#include "qspec/periodogram.hpp"
#include "qspec/smoothing.hpp"
#include "qspec/simulation.hpp"
#include "qspec/truth.hpp"
#include "qspec/experiments.hpp"
#include "qspec/io.hpp"
#include "qspec/version.hpp"
