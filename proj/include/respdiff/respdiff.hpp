#pragma once

#include "respdiff/bounds.hpp"
#include "respdiff/core.hpp"
#include "respdiff/csv.hpp"
#include "respdiff/montecarlo.hpp"
#include "respdiff/optimizer.hpp"
#include "respdiff/parallel.hpp"
#include "respdiff/range.hpp"
#include "respdiff/rng.hpp"
#include "respdiff/source.hpp"
#include "respdiff/statistic.hpp"
#include "respdiff/sweep.hpp"
