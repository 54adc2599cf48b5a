#pragma once

#include "qtseg/csv.hpp"
#include "qtseg/error.hpp"
#include "qtseg/imgio.hpp"
#include "qtseg/kgda.hpp"
#include "qtseg/phantom.hpp"
#include "qtseg/pipeline.hpp"
#include "qtseg/serialize.hpp"
#include "qtseg/stratify.hpp"
#include "qtseg/threshopt.hpp"
