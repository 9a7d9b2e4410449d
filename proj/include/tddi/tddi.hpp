#pragma once

#include "tddi/case_io.hpp"
#include "tddi/cpf.hpp"
#include "tddi/csv.hpp"
#include "tddi/errors.hpp"
#include "tddi/estimator.hpp"
#include "tddi/measurements.hpp"
#include "tddi/network.hpp"
#include "tddi/powerflow.hpp"
#include "tddi/scenario.hpp"
#include "tddi/stability.hpp"
