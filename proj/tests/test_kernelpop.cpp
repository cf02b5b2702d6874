#include <doctest.h>

TEST_SUITE("kernelpop") {}
