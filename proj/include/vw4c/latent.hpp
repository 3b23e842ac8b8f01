#pragma once

#include <vector>

namespace vw4c {

// Bottleneck posterior: per-sample mean and standard deviation vectors,
// stored batch-major (batch*dim entries). sigma is strictly positive.
struct LatentDistribution {
  int batch = 0;
  int dim = 0;
  std::vector<double> mu;
  std::vector<double> sigma;

  double mu_at(int b, int i) const { return mu[size_t(b) * dim + i]; }
  double sigma_at(int b, int i) const { return sigma[size_t(b) * dim + i]; }
};

}  // namespace vw4c
