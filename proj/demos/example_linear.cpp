// Finds the invariant part of a small monomial dictionary under a planar
// rotation-contraction and prints the identified eigenvalues.

#include <iostream>

#include "koopman/koopman.hpp"

int main() {
  using namespace koopman;
  SystemSpec spec;
  RealMatrix a(2, 2);
  a << 0.8, 0.5, -0.5, 0.8;
  spec.dynamics = DiscreteLinear{a};
  spec.box = {{-2, 2}, {-2, 2}};
  spec.seed = 1;
  const SnapshotSet data = generate(spec, 10000);

  const MonomialDictionary dict(
      2, {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}, {3, 0}, {0, 3}, {2, 1}});
  const RealMatrix dx = dict.evaluate(data.x);
  const RealMatrix dy = dict.evaluate(data.y);

  const SsdResult r = ssd(dx, dy);
  std::cout << "invariant subspace dimension: " << r.dim() << '\n';
  const ReducedKoopman red = reduced_koopman(dx, dy, r);
  for (const auto& m : lift_eigenvectors(dx, dy, r, red))
    std::cout << "  lambda = " << m.lambda << "  defect = " << m.data_defect << '\n';
}
