/** @brief Runs the bound pipeline at one parameter point and prints each stage and the binding condition. */
#include <cstdio>
#include <cstdlib>

#include "polygas/boundpipe.hpp"

int main(int argc, char** argv) {
  const double h = argc > 1 ? std::atof(argv[1]) : 1e-8;
  polygas::CertificateOptions o;
  o.eta = 0.25;
  auto c = polygas::error_certificate(h, 0.2, 2.0, 1e-3, o);
  std::printf("h = %g, n = %d, g = %.4g, phibar = %.4g\n", h, c.scale.n, c.scale.g, c.scale.phibar);
  for (const auto& st : c.stages)
    std::printf("  %-13s %s  %s\n", st.name.c_str(), st.ok ? "ok     " : "refused", st.detail.c_str());
  if (c.refused) {
    std::printf("refused at %s, binding condition %s\n", c.binding_stage.c_str(), c.binding_condition.c_str());
    return 2;
  }
  std::printf("relative bound %.3g\n", c.relative_bound);
  return 0;
}
