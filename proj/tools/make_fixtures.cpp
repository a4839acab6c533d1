// Writes a small synthetic corpus for trying out the relief commands.
//   relief_make_fixtures OUT_DIR [SIZE]

#include <fmt/format.h>

#include <cstdlib>
#include <string>

#include "relief/error.hpp"
#include "relief/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    fmt::print(stderr, "usage: {} OUT_DIR [SIZE=256]\n", argv[0]);
    return 2;
  }
  const std::size_t size = argc == 3 ? std::strtoul(argv[2], nullptr, 10) : 256;
  if (size < 16) {
    fmt::print(stderr, "SIZE must be at least 16\n");
    return 2;
  }
  try {
    const auto corpus = relief::synthetic::write_fixture_corpus(argv[1], size);
    fmt::print("{{\"rel_depth\":\"{}\",\"detail_normal\":\"{}\",\"rough_depth\":\"{}\","
               "\"gt_dir\":\"{}\",\"pred_dir\":\"{}\"}}\n",
               corpus.rel_depth.string(), corpus.detail_normal.string(),
               corpus.rough_depth.string(), corpus.gt_dir.string(), corpus.pred_dir.string());
  } catch (const relief::Error& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 1;
  }
  return 0;
}
