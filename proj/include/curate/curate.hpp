#pragma once

#include "curate/annotation_qc.hpp"
#include "curate/caption_qa.hpp"
#include "curate/cascade.hpp"
#include "curate/content_filter.hpp"
#include "curate/dedup.hpp"
#include "curate/digest.hpp"
#include "curate/error.hpp"
#include "curate/image.hpp"
#include "curate/mixture.hpp"
#include "curate/parallel.hpp"
#include "curate/pipeline.hpp"
#include "curate/random.hpp"
#include "curate/rebalance.hpp"
#include "curate/report.hpp"
#include "curate/sample.hpp"
#include "curate/scorer.hpp"
#include "curate/stage.hpp"
#include "curate/stage_config.hpp"
#include "curate/stat_metrics.hpp"
#include "curate/taxonomy.hpp"
