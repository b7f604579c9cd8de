// core_model.hpp: few-level molecules and their Liouville-space representation
//
// Density matrices are stored as row-major vectors: rho(n,m) -> index n*d + m.
// The Hamiltonian is diagonal in the level basis and dephasing acts on each
// coherence separately, so the Liouvillian is diagonal in this basis with
// eigenvalues (e_n - e_m) - i*gamma_nm.

#pragma once

#include "vmisim/types.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace vmisim {

struct MolecularModel {
    std::string id;
    std::vector<double> energies;            // angular frequency units
    std::vector<std::string> labels;         // optional, one per level
    Eigen::MatrixXd dephasing;               // gamma_nm, symmetric, zero diagonal
    std::array<Eigen::MatrixXcd, 3> dipole;  // mu^nu_nm, Hermitian per component
    Vec3 position = Vec3::Zero();

    int levels() const { return static_cast<int>(energies.size()); }

    // Index of the lowest level; the initial state is its population.
    int ground_level() const {
        int g = 0;
        for (int n = 1; n < levels(); ++n)
            if (energies[n] < energies[g]) g = n;
        return g;
    }

    // Throws ModelError describing the first violated invariant.
    void validate() const;
};

// Empty model with d levels: zero dipoles, zero dephasing.
inline MolecularModel make_model(std::string id, std::vector<double> energies) {
    MolecularModel m;
    m.id = std::move(id);
    const auto d = static_cast<Eigen::Index>(energies.size());
    m.energies = std::move(energies);
    m.dephasing = Eigen::MatrixXd::Zero(d, d);
    for (auto& mu : m.dipole) mu = Eigen::MatrixXcd::Zero(d, d);
    return m;
}

// Sets mu_nm and its Hermitian partner mu_mn.
inline void set_dipole(MolecularModel& m, int n, int k, const CVec3& mu) {
    for (int nu = 0; nu < 3; ++nu) {
        m.dipole[nu](n, k) = mu(nu);
        m.dipole[nu](k, n) = std::conj(mu(nu));
    }
}

inline void set_dephasing(MolecularModel& m, int n, int k, double rate) {
    m.dephasing(n, k) = rate;
    m.dephasing(k, n) = rate;
}

// Two-level system g=0, e=omega_eg with a z-polarized transition dipole.
inline MolecularModel two_level(std::string id, double omega_eg, double gamma, double mu = 1.0) {
    auto m = make_model(std::move(id), {0.0, omega_eg});
    m.labels = {"g", "e"};
    set_dephasing(m, 0, 1, gamma);
    set_dipole(m, 0, 1, CVec3(0.0, 0.0, mu));
    return m;
}

// Three-level system g, e, f with all three transitions dipole-allowed along z.
// A closed loop mu_ge*mu_ef*mu_fg is required for a nonzero second-order response.
inline MolecularModel three_level(std::string id, double omega_e, double omega_f, double gamma,
                                  double mu_ge = 1.0, double mu_ef = 0.8, double mu_gf = 0.5) {
    auto m = make_model(std::move(id), {0.0, omega_e, omega_f});
    m.labels = {"g", "e", "f"};
    set_dephasing(m, 0, 1, gamma);
    set_dephasing(m, 1, 2, gamma);
    set_dephasing(m, 0, 2, gamma);
    set_dipole(m, 0, 1, CVec3(0.0, 0.0, mu_ge));
    set_dipole(m, 1, 2, CVec3(0.0, 0.0, mu_ef));
    set_dipole(m, 0, 2, CVec3(0.0, 0.0, mu_gf));
    return m;
}

inline void MolecularModel::validate() const {
    const int d = levels();
    const std::string who = "molecule '" + id + "'";
    if (d < 2) throw ModelError(who + ": at least two levels are required");
    for (double e : energies)
        if (!std::isfinite(e)) throw ModelError(who + ": energies must be finite");
    if (dephasing.rows() != d || dephasing.cols() != d)
        throw ModelError(who + ": dephasing matrix has wrong shape");
    for (int n = 0; n < d; ++n) {
        if (dephasing(n, n) != 0.0) throw ModelError(who + ": population dephasing must be zero");
        for (int k = 0; k < d; ++k) {
            const double g = dephasing(n, k);
            if (!std::isfinite(g) || g < 0.0)
                throw ModelError(who + ": negative dephasing rate for pair (" + std::to_string(n) +
                                 "," + std::to_string(k) + ")");
            if (g != dephasing(k, n))
                throw ModelError(who + ": dephasing must be symmetric");
        }
    }
    for (int nu = 0; nu < 3; ++nu) {
        const auto& mu = dipole[nu];
        if (mu.rows() != d || mu.cols() != d)
            throw ModelError(who + ": dipole matrix has wrong shape");
        for (int n = 0; n < d; ++n) {
            if (std::abs(mu(n, n)) != 0.0)
                throw ModelError(who + ": permanent dipoles are not supported (level " +
                                 std::to_string(n) + ")");
            for (int k = n + 1; k < d; ++k)
                if (std::abs(mu(n, k) - std::conj(mu(k, n))) > 1e-12)
                    throw ModelError(who + ": dipole is not Hermitian for pair (" +
                                     std::to_string(n) + "," + std::to_string(k) + ")");
        }
    }
}

// Read-only Liouville-space representation of one molecule.
class SuperOpSpace {
public:
    explicit SuperOpSpace(const MolecularModel& model);

    int levels() const { return d_; }
    int dim() const { return d_ * d_; }
    int index(int n, int m) const { return n * d_ + m; }

    const Eigen::VectorXcd& eigenvalues() const { return lambda_; }
    Eigen::MatrixXcd liouvillian() const { return lambda_.asDiagonal(); }
    const Eigen::MatrixXcd& v_left(int nu) const { return vl_[nu]; }
    const Eigen::MatrixXcd& v_right(int nu) const { return vr_[nu]; }
    const Eigen::MatrixXcd& v_plus(int nu) const { return vp_[nu]; }
    const Eigen::MatrixXcd& v_minus(int nu) const { return vm_[nu]; }
    const Eigen::VectorXcd& ground() const { return ground_; }
    const Eigen::RowVectorXcd& trace_row() const { return trace_; }

    // Tr[x] for a Liouville vector x.
    cplx trace(const Eigen::VectorXcd& x) const { return (trace_ * x)(0); }

    // V_-(f) x with V(f) = sum_nu f_nu V^nu.
    Eigen::VectorXcd apply_minus(const CVec3& f, const Eigen::VectorXcd& x) const {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
        for (int nu = 0; nu < 3; ++nu)
            if (f(nu) != 0.0) out.noalias() += f(nu) * (vm_[nu] * x);
        return out;
    }

    // Tr[V_+(f) x].
    cplx trace_plus(const CVec3& f, const Eigen::VectorXcd& x) const {
        cplx s = 0.0;
        for (int nu = 0; nu < 3; ++nu)
            if (f(nu) != 0.0) s += f(nu) * (tp_[nu] * x)(0);
        return s;
    }

    // Tr[V_+^nu x] for nu = x, y, z.
    CVec3 emission(const Eigen::VectorXcd& x) const {
        CVec3 e;
        for (int nu = 0; nu < 3; ++nu) e(nu) = (tp_[nu] * x)(0);
        return e;
    }

    // Row vector r with r x = Tr[V_+(f) x].
    Eigen::RowVectorXcd trace_plus_row(const CVec3& f) const {
        Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(dim());
        for (int nu = 0; nu < 3; ++nu)
            if (f(nu) != 0.0) r += f(nu) * tp_[nu];
        return r;
    }

    // G(omega) x = (omega - L)^{-1} x using the diagonal Liouvillian.
    Eigen::VectorXcd apply_resolvent(cplx omega, const Eigen::VectorXcd& x) const;

    // Tr[V_+^nu G(omega) x] for nu = x, y, z, skipping entries the trace cannot see.
    CVec3 emission_resolvent(cplx omega, const Eigen::VectorXcd& x) const {
        CVec3 e = CVec3::Zero();
        for (int p = 0; p < dim(); ++p) {
            if (x(p) == 0.0 || (tp_[0](p) == 0.0 && tp_[1](p) == 0.0 && tp_[2](p) == 0.0)) continue;
            const cplx den = omega - lambda_(p);
            if (den == 0.0)
                throw NumericalError("resolvent is singular at omega = " + std::to_string(omega.real()));
            const cplx v = x(p) / den;
            for (int nu = 0; nu < 3; ++nu) e(nu) += tp_[nu](p) * v;
        }
        return e;
    }

    // Tr[V_+(f) G(omega) x]. Entries the trace cannot see (populations) are
    // skipped, so a population pole at omega = 0 does not matter here.
    cplx trace_plus_resolvent(const CVec3& f, cplx omega, const Eigen::VectorXcd& x) const {
        const Eigen::RowVectorXcd r = trace_plus_row(f);
        cplx s = 0.0;
        for (int p = 0; p < dim(); ++p) {
            if (r(p) == 0.0 || x(p) == 0.0) continue;
            const cplx den = omega - lambda_(p);
            if (den == 0.0)
                throw NumericalError("resolvent is singular at omega = " + std::to_string(omega.real()));
            s += r(p) * x(p) / den;
        }
        return s;
    }

private:
    int d_;
    Eigen::VectorXcd lambda_;
    std::array<Eigen::MatrixXcd, 3> vl_, vr_, vp_, vm_;
    std::array<Eigen::RowVectorXcd, 3> tp_;
    Eigen::VectorXcd ground_;
    Eigen::RowVectorXcd trace_;
};

inline SuperOpSpace::SuperOpSpace(const MolecularModel& model) : d_(model.levels()) {
    model.validate();
    const int D = d_ * d_;
    lambda_.resize(D);
    for (int n = 0; n < d_; ++n)
        for (int m = 0; m < d_; ++m)
            lambda_(index(n, m)) = cplx(model.energies[n] - model.energies[m], -model.dephasing(n, m));

    for (int nu = 0; nu < 3; ++nu) {
        const auto& mu = model.dipole[nu];
        Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(D, D);
        Eigen::MatrixXcd right = Eigen::MatrixXcd::Zero(D, D);
        for (int n = 0; n < d_; ++n)
            for (int m = 0; m < d_; ++m)
                for (int k = 0; k < d_; ++k) {
                    left(index(n, m), index(k, m)) += mu(n, k);   // (V rho)_nm = V_nk rho_km
                    right(index(n, m), index(n, k)) += mu(k, m);  // (rho V)_nm = rho_nk V_km
                }
        vl_[nu] = left;
        vr_[nu] = right;
        vm_[nu] = left - right;
        vp_[nu] = 0.5 * (left + right);
    }

    trace_ = Eigen::RowVectorXcd::Zero(D);
    for (int n = 0; n < d_; ++n) trace_(index(n, n)) = 1.0;
    for (int nu = 0; nu < 3; ++nu) tp_[nu] = trace_ * vp_[nu];

    ground_ = Eigen::VectorXcd::Zero(D);
    const int g = model.ground_level();
    ground_(index(g, g)) = 1.0;
}

inline Eigen::VectorXcd SuperOpSpace::apply_resolvent(cplx omega, const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd out(dim());
    for (int p = 0; p < dim(); ++p) {
        if (x(p) == 0.0) {
            out(p) = 0.0;
            continue;
        }
        const cplx den = omega - lambda_(p);
        if (den == 0.0)
            throw NumericalError("resolvent is singular at omega = " + std::to_string(omega.real()));
        out(p) = x(p) / den;
    }
    return out;
}

inline SuperOpSpace build_superop_space(const MolecularModel& model) { return SuperOpSpace(model); }

// (omega - L)^{-1} as a dense matrix, by direct LU solve.
inline Eigen::MatrixXcd resolvent(const SuperOpSpace& space, cplx omega) {
    const int D = space.dim();
    Eigen::MatrixXcd a = omega * Eigen::MatrixXcd::Identity(D, D) - space.liouvillian();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(a);
    if (!lu.isInvertible())
        throw NumericalError("resolvent is singular at omega = " + std::to_string(omega.real()));
    return lu.solve(Eigen::MatrixXcd::Identity(D, D));
}

// G(t) = -i theta(t) exp(-i L t); zero for t < 0.
inline Eigen::MatrixXcd propagator(const SuperOpSpace& space, double t) {
    const int D = space.dim();
    if (t < 0.0) return Eigen::MatrixXcd::Zero(D, D);
    Eigen::VectorXcd diag(D);
    for (int p = 0; p < D; ++p) diag(p) = -I * std::exp(-I * space.eigenvalues()(p) * t);
    return diag.asDiagonal();
}

// G(t) x without forming the matrix.
inline Eigen::VectorXcd apply_propagator(const SuperOpSpace& space, double t, const Eigen::VectorXcd& x) {
    if (t < 0.0) return Eigen::VectorXcd::Zero(space.dim());
    Eigen::VectorXcd out(space.dim());
    for (int p = 0; p < space.dim(); ++p)
        out(p) = x(p) == 0.0 ? cplx(0.0) : -I * std::exp(-I * space.eigenvalues()(p) * t) * x(p);
    return out;
}

} // namespace vmisim
