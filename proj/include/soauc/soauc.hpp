#pragma once

#include "soauc/config.hpp"
#include "soauc/core.hpp"
#include "soauc/data.hpp"
#include "soauc/eval.hpp"
#include "soauc/kernel_learner.hpp"
#include "soauc/learners.hpp"
#include "soauc/linear_learner.hpp"
#include "soauc/moments.hpp"
#include "soauc/regret.hpp"
#include "soauc/rng.hpp"
#include "soauc/schedule.hpp"
#include "soauc/snapshot.hpp"
#include "soauc/surrogate.hpp"
#include "soauc/synthetic.hpp"
#include "soauc/verify.hpp"
