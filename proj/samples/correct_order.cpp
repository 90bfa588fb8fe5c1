// Corrects a few noisy order transcripts against the telesales phrase list
// with every representation and selector.

#include <cstdio>

#include "phoco/dataset.hpp"
#include "phoco/normalizer.hpp"
#include "phoco/phoco.hpp"

int main() {
  using namespace phoco;
  const Context ctx(default_context_phrases());
  const auto rules = NormRules::defaults();

  for (const char* raw : {"Quiero 2 koka kola en lata", "me da una bote ya de bidrio de fanta de naranga",
                          "y un sidral mundet de 600 ml", "confirmar pedid por favor"}) {
    const auto hyp = normalize(raw, rules);
    std::printf("%s\n", hyp.c_str());
    for (auto rep : kAllRepresentations) {
      for (auto sel : kAllSelectors) {
        const auto r = correct(hyp, ctx, {0.3, rep, sel});
        std::printf("  %-5s %-3s -> %s\n", std::string(to_string(rep)).c_str(),
                    std::string(to_string(sel)).c_str(), r.text.c_str());
      }
    }
  }
}
