#pragma once

#include "selex/common.hpp"
#include "selex/ingest.hpp"
#include "selex/dataset.hpp"
#include "selex/bipartite.hpp"
#include "selex/metrics.hpp"
#include "selex/taxonomy.hpp"
#include "selex/synth.hpp"
#include "selex/report.hpp"
#include "selex/pipeline.hpp"
