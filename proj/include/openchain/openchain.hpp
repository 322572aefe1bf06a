#pragma once

#include "openchain/types.hpp"
#include "openchain/chain.hpp"
#include "openchain/random.hpp"
#include "openchain/protocols.hpp"
#include "openchain/model.hpp"
#include "openchain/simulate.hpp"
#include "openchain/cumulants.hpp"
#include "openchain/mgf.hpp"
#include "openchain/stats.hpp"
#include "openchain/io.hpp"
#include "openchain/config.hpp"
#include "openchain/app.hpp"
