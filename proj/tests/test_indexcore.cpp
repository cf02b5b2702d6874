#include <doctest.h>

TEST_SUITE("indexcore") {}
