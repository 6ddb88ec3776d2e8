#pragma once

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"
#include "nodal/partition_io.hpp"
#include "nodal/criticality.hpp"
#include "nodal/dtn.hpp"
#include "nodal/circle.hpp"
#include "nodal/separable.hpp"
#include "nodal/grid.hpp"
#include "nodal/strip.hpp"
#include "nodal/report.hpp"
#include "nodal/pipeline.hpp"
