#ifndef DENSREG_DENSREG_HPP
#define DENSREG_DENSREG_HPP

#include "densreg/adaptive.hpp"
#include "densreg/config.hpp"
#include "densreg/data.hpp"
#include "densreg/gibbs.hpp"
#include "densreg/links.hpp"
#include "densreg/mcmc.hpp"
#include "densreg/metrics.hpp"
#include "densreg/model.hpp"
#include "densreg/numeric.hpp"
#include "densreg/parallel.hpp"
#include "densreg/particles.hpp"
#include "densreg/predict.hpp"
#include "densreg/prior.hpp"
#include "densreg/rng.hpp"
#include "densreg/simgen.hpp"
#include "densreg/smc.hpp"
#include "densreg/transforms.hpp"
#include "densreg/types.hpp"

#endif  // DENSREG_DENSREG_HPP
