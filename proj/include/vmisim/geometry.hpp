// geometry.hpp: retarded dipole coupling tensors and lattice phase sums
//
// D(r, kappa) = (-lap delta + grad grad) e^{i kappa r} / r for r != 0, evaluated
// in closed form:
//   D = e^{i kappa r} / r^3 [ (3 rr - delta)(1 - i kappa r) + (delta - rr) kappa^2 r^2 ]
// and C(r) = D(r, 0) = (3 rr - delta) / r^3.

#pragma once

#include "vmisim/types.hpp"

#include <vector>

namespace vmisim {

struct CouplingTensor {
    Mat3c matrix = Mat3c::Zero();
    Vec3 separation = Vec3::Zero();
    double wavenumber = 0.0;  // omega / c; zero for the static tensor
};

inline CouplingTensor tensor_D(const Vec3& r, cplx kappa) {
    const double rn = r.norm();
    if (rn == 0.0) throw ModelError("coupling tensor is undefined at zero separation");
    const Eigen::Matrix3d rr = (r / rn) * (r / rn).transpose();
    const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
    const cplx kr = kappa * rn;
    const cplx pre = std::exp(I * kr) / (rn * rn * rn);
    CouplingTensor t;
    t.matrix = pre * ((3.0 * rr - id).cast<cplx>() * (1.0 - I * kr) + (id - rr).cast<cplx>() * (kr * kr));
    t.separation = r;
    t.wavenumber = kappa.real();
    return t;
}

inline CouplingTensor tensor_C(const Vec3& r) { return tensor_D(r, 0.0); }

// Sum over ordered pairs a != b of e^{i (K.r_b - k_out.r_a)}, where K is the sum of
// the signed incoming wavevectors absorbed by molecule b.
inline cplx phase_matching_sum(const std::vector<Vec3>& positions, const Vec3& k_out,
                               const std::vector<Vec3>& k_in_signed) {
    if (positions.size() < 2) throw ModelError("phase matching needs at least two positions");
    Vec3 k_in = Vec3::Zero();
    for (const auto& k : k_in_signed) k_in += k;
    // sum_{a != b} = (sum_b e^{iK.r_b})(sum_a e^{-ik.r_a}) - sum_a e^{i(K-k).r_a}
    cplx in = 0.0, out = 0.0, diag = 0.0;
    for (const auto& r : positions) {
        in += std::exp(I * k_in.dot(r));
        out += std::exp(-I * k_out.dot(r));
        diag += std::exp(I * (k_in - k_out).dot(r));
    }
    return in * out - diag;
}

enum class LatticeShape { cubic, line };

// M^3 sites (cubic) or M sites along x (line), lower corner at the origin.
inline std::vector<Vec3> lattice_positions(double spacing, int M, LatticeShape shape = LatticeShape::cubic) {
    if (M < 1) throw ModelError("lattice size must be positive");
    if (!(spacing > 0.0)) throw ModelError("lattice spacing must be positive");
    std::vector<Vec3> out;
    if (shape == LatticeShape::line) {
        for (int i = 0; i < M; ++i) out.emplace_back(spacing * i, 0.0, 0.0);
        return out;
    }
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k) out.emplace_back(spacing * i, spacing * j, spacing * k);
    return out;
}

} // namespace vmisim
