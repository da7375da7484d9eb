// Copyright 2026 The causex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Writes a planted-signal corpus (data.csv) and matching word vectors
// (vectors.txt) for trying the pipeline without annotated data.

#include <iostream>

#include "CLI11.hpp"
#include "causex/error.hpp"
#include "causex/synthetic.hpp"

int main(int argc, char** argv) {
  causex::SyntheticConfig cfg;
  std::string out = "synthetic";
  CLI::App app{"Generate a synthetic cause-labelled corpus", "causex_synth"};
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--docs-per-class", cfg.docs_per_class)->capture_default_str();
  app.add_option("--dim", cfg.dim)->capture_default_str();
  app.add_option("--filler-vocabulary", cfg.filler_vocabulary)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto corpus = causex::make_synthetic(cfg);
    causex::write_synthetic(corpus, out);
    std::cerr << "wrote " << corpus.docs.size() << " documents and " << corpus.table.size()
              << " vectors to " << out << "\n";
  } catch (const causex::Error& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
