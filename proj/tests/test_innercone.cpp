#include <doctest.h>

TEST_SUITE("innercone") {}
