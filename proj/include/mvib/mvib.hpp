#pragma once

#include "mvib/error.hpp"
#include "mvib/rng.hpp"
#include "mvib/oracle.hpp"
#include "mvib/pmf_io.hpp"
#include "mvib/random_pmf.hpp"
#include "mvib/venn.hpp"
#include "mvib/tensor.hpp"
#include "mvib/autodiff.hpp"
#include "mvib/losses.hpp"
#include "mvib/synth.hpp"
#include "mvib/model.hpp"
#include "mvib/train.hpp"
#include "mvib/checkpoint.hpp"
#include "mvib/probe.hpp"
#include "mvib/experiment.hpp"
