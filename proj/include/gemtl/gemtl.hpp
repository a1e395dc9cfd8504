#pragma once

#include "gemtl/cost.hpp"
#include "gemtl/detection.hpp"
#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/loss.hpp"
#include "gemtl/network.hpp"
#include "gemtl/prng.hpp"
#include "gemtl/serialize.hpp"
#include "gemtl/task.hpp"
#include "gemtl/tensor.hpp"
