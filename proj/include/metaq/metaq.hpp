#pragma once

// Everything except the command-line driver.

#include "metaq/algebra.hpp"
#include "metaq/automata.hpp"
#include "metaq/chase.hpp"
#include "metaq/error.hpp"
#include "metaq/graphdb.hpp"
#include "metaq/io/algebra_text.hpp"
#include "metaq/io/constraints.hpp"
#include "metaq/io/schema_text.hpp"
#include "metaq/io/xml_graph.hpp"
#include "metaq/model.hpp"
#include "metaq/optimize.hpp"
#include "metaq/pathquery.hpp"
#include "metaq/report.hpp"
