#include <cstdio>

#include "oracle/selftest.hpp"

int main() { return svreg::oracle::run_selftest(); }
