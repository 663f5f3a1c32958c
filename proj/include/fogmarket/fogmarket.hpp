// Umbrella header for the fogmarket library.
#pragma once

#include "fogmarket/experiments.hpp"
#include "fogmarket/log.hpp"
#include "fogmarket/market.hpp"
#include "fogmarket/oracle.hpp"
#include "fogmarket/orchestrator.hpp"
#include "fogmarket/rng.hpp"
#include "fogmarket/scenario.hpp"
#include "fogmarket/serialize.hpp"
#include "fogmarket/stage1.hpp"
#include "fogmarket/stage2.hpp"
#include "fogmarket/stage3.hpp"
