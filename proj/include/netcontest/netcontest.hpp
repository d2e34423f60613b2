#pragma once

#include "netcontest/builder.hpp"
#include "netcontest/coalition.hpp"
#include "netcontest/equilibrium.hpp"
#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"
#include "netcontest/instance_io.hpp"
#include "netcontest/linalg.hpp"
#include "netcontest/plot_data.hpp"
#include "netcontest/three_node.hpp"
#include "netcontest/transfer.hpp"
