#ifndef MCC_MCC_HPP
#define MCC_MCC_HPP

#include "mcc/core.hpp"
#include "mcc/eval.hpp"
#include "mcc/experiment.hpp"
#include "mcc/featurize.hpp"
#include "mcc/ingest.hpp"
#include "mcc/naive_fusion.hpp"
#include "mcc/neural/checkpoint.hpp"
#include "mcc/neural/classifier.hpp"
#include "mcc/neural/lstm.hpp"
#include "mcc/neural/optimizer.hpp"
#include "mcc/neural/params.hpp"
#include "mcc/neural/train.hpp"
#include "mcc/pipeline.hpp"
#include "mcc/report.hpp"
#include "mcc/simulator.hpp"

#endif  // MCC_MCC_HPP
