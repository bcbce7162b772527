#pragma once

#include "arcplant/arc_circuit.hpp"
#include "arcplant/commands.hpp"
#include "arcplant/errors.hpp"
#include "arcplant/hydraulics.hpp"
#include "arcplant/identification.hpp"
#include "arcplant/io/csv.hpp"
#include "arcplant/io/reports.hpp"
#include "arcplant/io/scenario_file.hpp"
#include "arcplant/sim_engine.hpp"
