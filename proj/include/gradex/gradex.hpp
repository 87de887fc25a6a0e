// Convenience include for the whole library.
#pragma once

#include <gradex/charts.hpp>
#include <gradex/common.hpp>
#include <gradex/comparison_paths.hpp>
#include <gradex/config.hpp>
#include <gradex/continuation.hpp>
#include <gradex/critical_points.hpp>
#include <gradex/driver.hpp>
#include <gradex/geometry.hpp>
#include <gradex/io.hpp>
#include <gradex/manifold_learning.hpp>
#include <gradex/potentials.hpp>
#include <gradex/sampling.hpp>
#include <gradex/surrogates.hpp>
