#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "probshape/allocator.hpp"

int main(int argc, char** argv) {
  probshape::retain_heap_between_steps();
  doctest::Context context(argc, argv);
  return context.run();
}
