#include <doctest.h>

TEST_SUITE("momentcone") {}
