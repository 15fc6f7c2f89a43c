#pragma once

// Umbrella header for the whole pipeline.

#include "claimsearch/classifier.hpp"
#include "claimsearch/config.hpp"
#include "claimsearch/corpus.hpp"
#include "claimsearch/error.hpp"
#include "claimsearch/evaluation.hpp"
#include "claimsearch/jsonl.hpp"
#include "claimsearch/pairs.hpp"
#include "claimsearch/remote_classifier.hpp"
#include "claimsearch/rng.hpp"
#include "claimsearch/scoring.hpp"
#include "claimsearch/search.hpp"
#include "claimsearch/slicer.hpp"
#include "claimsearch/text.hpp"
