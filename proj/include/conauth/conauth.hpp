#pragma once

// umbrella header

#include "conauth/behavior.hpp"
#include "conauth/dataset.hpp"
#include "conauth/evaluation.hpp"
#include "conauth/features.hpp"
#include "conauth/fusion.hpp"
#include "conauth/io.hpp"
#include "conauth/kde.hpp"
#include "conauth/pipeline.hpp"
#include "conauth/qcd.hpp"
#include "conauth/rng.hpp"
#include "conauth/stats.hpp"
#include "conauth/svm.hpp"
#include "conauth/synthetic.hpp"
#include "conauth/types.hpp"
#include "conauth/version.hpp"
