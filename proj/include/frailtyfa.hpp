#pragma once

#include "frailtyfa/corr.hpp"
#include "frailtyfa/efa.hpp"
#include "frailtyfa/errors.hpp"
#include "frailtyfa/findex.hpp"
#include "frailtyfa/ingest.hpp"
#include "frailtyfa/pipeline.hpp"
#include "frailtyfa/regress.hpp"
#include "frailtyfa/report.hpp"
#include "frailtyfa/rotate.hpp"
#include "frailtyfa/scores.hpp"
#include "frailtyfa/synth.hpp"
#include "frailtyfa/version.hpp"
