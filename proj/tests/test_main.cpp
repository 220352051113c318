#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// compile-time check that every public header is self-contained
#include "treetune/complexity.hpp"
#include "treetune/harness.hpp"
#include "treetune/importance.hpp"
#include "treetune/openml.hpp"
#include "treetune/stats.hpp"
