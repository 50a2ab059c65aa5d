#ifndef CASC_CASC_HPP
#define CASC_CASC_HPP

#include "casc/beam.hpp"
#include "casc/compose.hpp"
#include "casc/error.hpp"
#include "casc/eval.hpp"
#include "casc/features.hpp"
#include "casc/graph.hpp"
#include "casc/hypothesis.hpp"
#include "casc/labels.hpp"
#include "casc/learn.hpp"
#include "casc/prune.hpp"
#include "casc/rng.hpp"
#include "casc/synth.hpp"

#endif
