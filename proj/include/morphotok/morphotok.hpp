#pragma once

#include "morphotok/bpe.hpp"
#include "morphotok/common.hpp"
#include "morphotok/corpus.hpp"
#include "morphotok/distributions.hpp"
#include "morphotok/metrics.hpp"
#include "morphotok/pipeline.hpp"
#include "morphotok/report.hpp"
#include "morphotok/stats.hpp"
#include "morphotok/typology.hpp"
