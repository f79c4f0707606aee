#pragma once

#include "covsense/covariance.hpp"
#include "covsense/detectors.hpp"
#include "covsense/error.hpp"
#include "covsense/harness.hpp"
#include "covsense/io.hpp"
#include "covsense/prewhiten.hpp"
#include "covsense/rng.hpp"
#include "covsense/sigmodels.hpp"
#include "covsense/theory.hpp"
