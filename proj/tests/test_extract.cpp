#include <doctest.h>

TEST_SUITE("extract") {}
