#pragma once

#include "votewalk/gaussian.hpp"
#include "votewalk/model.hpp"
#include "votewalk/montecarlo.hpp"
#include "votewalk/optimize.hpp"
