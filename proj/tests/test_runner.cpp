#include <doctest.h>

TEST_SUITE("runner") {}
