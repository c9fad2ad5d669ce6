#include <catch2/catch_amalgamated.hpp>
#include "ppsl/ppsl.hpp"
TEST_CASE("placeholder test_runner") { REQUIRE(true); }
