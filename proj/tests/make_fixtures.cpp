// Writes a small pair file and a model cache for the CLI smoke test:
//   <dir>/pairs.tsv
//   <dir>/cache/vectors.vec  tiny-mlm/  tiny-gpt2/  bigram.arpa

#include <cstdio>
#include <string>

#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s DIR\n", argv[0]);
    return 2;
  }
  const fs::path dir = argv[1];
  const fs::path cache = dir / "cache";
  fs::create_directories(cache);
  const auto pairs = pt::synthetic_pairs(160, 11);
  pt::write_tsv(dir / "pairs.tsv", pairs);
  pt::synthetic_vectors(16).save_text(cache / "vectors.vec");
  pt::make_tiny_mlm(cache / "tiny-mlm");
  pt::make_tiny_gpt2(cache / "tiny-gpt2");
  std::vector<std::string> sentences;
  for (const auto& p : pairs) {
    if (p.split != Split::train) continue;
    sentences.push_back(p.funny);
    sentences.push_back(p.serious);
  }
  NgramLM::train(sentences, 2).save_arpa(cache / "bigram.arpa");
  return 0;
}
