#pragma once

#include "mlti/rng.hpp"
#include "mlti/system.hpp"

namespace mlti {

/// Dense tensor with Bernoulli(fill) * N(0,1) entries.
DenseTensor random_tensor(const Shape& shape, Rng& rng, double fill = 1.0);

EvenPairedTensor random_paired(const PairedShape& pshape, Rng& rng, double fill = 1.0);

Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng, double fill = 1.0);

/// Orthogonal factor of the QR of a Gaussian matrix.
Eigen::MatrixXd random_orthogonal(Index n, Rng& rng);

struct RandomSystemOptions {
    double fill = 1.0;
    bool stabilize = true;    // rescale A to the target spectral radius
    double target_rho = 0.8;
};

MltiSystem random_system(const Shape& state, const Shape& input, const Shape& output, Rng& rng,
                         const RandomSystemOptions& opts = {});

TuckerSystem random_tucker_system(const Shape& state, const Shape& input, const Shape& output,
                                  Rng& rng, const RandomSystemOptions& opts = {});

/// Random generalized TT cores for the given paired shape; ranks has length
/// N+1 with leading/trailing ones.
GenTtCores random_gen_tt(const PairedShape& pshape, const std::vector<Index>& ranks, Rng& rng,
                         double fill = 1.0);

struct PlantedTtSystem {
    GenTtCores a;
    GenTtCores b;
    GenTtCores c;
    MltiSystem full;
};

/// System with planted generalized TT structure for A, B, C. When opts
/// stabilize is set the A cores are rescaled so rho(phi(A)) = target_rho.
PlantedTtSystem random_planted_tt_system(const Shape& state, const Shape& input,
                                         const Shape& output, std::vector<Index> ranks_a,
                                         std::vector<Index> ranks_b, std::vector<Index> ranks_c,
                                         Rng& rng, const RandomSystemOptions& opts = {});

/// Square paired tensor in CPD form with orthonormal factor matrices in
/// every position and descending weights starting at lambda1 (feeds the
/// CPD-weight stability criterion). Requires r <= min extent.
struct PlantedOrthonormalCpd {
    CpFactors cp;
    EvenPairedTensor full;
};
PlantedOrthonormalCpd planted_orthonormal_cpd(const Shape& state, Index r, double lambda1,
                                              Rng& rng);

} // namespace mlti
