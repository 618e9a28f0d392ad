#include <torch/torch.h>

#undef CHECK
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

int main(int argc, char** argv) {
  torch::set_num_threads(1);  // keep reductions bit-reproducible
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  return ctx.run();
}
