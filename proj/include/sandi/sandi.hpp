#pragma once

// Story-images alignment: semantic relatedness scoring, exact constrained
// placement, baselines, and the evaluation metric suite.

#include "sandi/corpus.hpp"
#include "sandi/descriptors.hpp"
#include "sandi/embedding.hpp"
#include "sandi/emit.hpp"
#include "sandi/errors.hpp"
#include "sandi/metrics.hpp"
#include "sandi/similarity.hpp"
#include "sandi/solver.hpp"
#include "sandi/stopwords.hpp"
