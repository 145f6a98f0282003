#pragma once

#include "wj/multiindex.hpp"
#include "wj/poly.hpp"
#include "wj/jet_dual.hpp"
#include "wj/map_jet.hpp"
