#pragma once

#include "cars/error.hpp"
#include "cars/survival_data.hpp"
#include "cars/ipcw.hpp"
#include "cars/shrink_corr.hpp"
#include "cars/cars_score.hpp"
#include "cars/cox.hpp"
#include "cars/fdr.hpp"
#include "cars/random.hpp"
#include "cars/simgen.hpp"
#include "cars/evalmetrics.hpp"
#include "cars/bench.hpp"
#include "cars/io.hpp"
