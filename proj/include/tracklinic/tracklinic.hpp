#pragma once

#include "tracklinic/annotation.hpp"
#include "tracklinic/commands.hpp"
#include "tracklinic/core.hpp"
#include "tracklinic/evaluation.hpp"
#include "tracklinic/extraction.hpp"
#include "tracklinic/io.hpp"
#include "tracklinic/parallel.hpp"
#include "tracklinic/report.hpp"
#include "tracklinic/serialization.hpp"
#include "tracklinic/simulator.hpp"
