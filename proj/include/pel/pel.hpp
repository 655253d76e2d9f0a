#pragma once

#include "pel/augment.hpp"
#include "pel/ensemble.hpp"
#include "pel/error.hpp"
#include "pel/features.hpp"
#include "pel/fusion.hpp"
#include "pel/geometry.hpp"
#include "pel/io.hpp"
#include "pel/labeling.hpp"
#include "pel/scene.hpp"
#include "pel/scoring.hpp"
#include "pel/selector.hpp"
#include "pel/synthbench.hpp"
