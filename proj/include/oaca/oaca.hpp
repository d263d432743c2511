#pragma once

#include "oaca/cohort.hpp"
#include "oaca/error.hpp"
#include "oaca/ingest.hpp"
#include "oaca/io.hpp"
#include "oaca/metrics.hpp"
#include "oaca/parallel.hpp"
#include "oaca/pipeline.hpp"
#include "oaca/rake.hpp"
#include "oaca/record.hpp"
#include "oaca/report.hpp"
#include "oaca/simulate.hpp"
#include "oaca/stratify.hpp"
