#ifndef CCGAE_CCGAE_HPP_
#define CCGAE_CCGAE_HPP_

#include "ccgae/autodiff.hpp"
#include "ccgae/checkpoint.hpp"
#include "ccgae/config.hpp"
#include "ccgae/core.hpp"
#include "ccgae/corruption.hpp"
#include "ccgae/data_io.hpp"
#include "ccgae/gradcheck.hpp"
#include "ccgae/io.hpp"
#include "ccgae/models.hpp"
#include "ccgae/pgm.hpp"
#include "ccgae/sampling.hpp"
#include "ccgae/training.hpp"

#endif  // CCGAE_CCGAE_HPP_
