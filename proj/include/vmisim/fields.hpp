// fields.hpp: Gaussian classical pulse components in time and frequency
//
// Fourier convention: F(w) = int dt f(t) e^{i w t}. The zeta = +1 component
// carries e^{-i Omega t}, so its transform peaks at w = +Omega; zeta = -1 is the
// complex conjugate in time and peaks at w = -Omega.

#pragma once

#include "vmisim/types.hpp"

#include <cmath>
#include <string>

namespace vmisim {

enum class PulseRole { drive, detection };

inline const char* to_string(PulseRole r) { return r == PulseRole::drive ? "drive" : "detection"; }

struct Pulse {
    PulseRole role = PulseRole::drive;
    double center_time = 0.0;
    double center_frequency = 1.0;
    double width = 1.0;
    cplx amplitude = 1.0;
    Vec3 k = Vec3::UnitX();                // |k| = Omega / c
    Vec3 polarization = Vec3::UnitZ();     // real unit vector orthogonal to k

    // Throws ModelError if the pulse violates its invariants for light speed c.
    void validate(double c) const {
        if (!(width > 0.0) || !std::isfinite(width)) throw ModelError("pulse width must be positive");
        if (!(center_frequency > 0.0) || !std::isfinite(center_frequency))
            throw ModelError("pulse center frequency must be positive");
        if (!std::isfinite(center_time)) throw ModelError("pulse center time must be finite");
        if (std::abs(polarization.norm() - 1.0) > 1e-12) throw ModelError("pulse polarization must be a unit vector");
        if (std::abs(polarization.dot(k)) > 1e-12 * std::max(1.0, k.norm()))
            throw ModelError("pulse polarization must be orthogonal to its wavevector");
        if (std::abs(k.norm() - center_frequency / c) > 1e-12 * std::max(1.0, k.norm()))
            throw ModelError("pulse wavevector magnitude must equal center_frequency / c");
    }
};

// Builds a pulse whose wavevector points along `direction` with |k| = Omega / c.
// Direction and polarization are normalized here; orthogonality is still checked.
inline Pulse make_pulse(PulseRole role, double center_time, double center_frequency, double width,
                        cplx amplitude, const Vec3& direction, const Vec3& polarization, double c = 1.0) {
    if (direction.norm() == 0.0) throw ModelError("pulse direction must be nonzero");
    if (polarization.norm() == 0.0) throw ModelError("pulse polarization must be nonzero");
    Pulse p;
    p.role = role;
    p.center_time = center_time;
    p.center_frequency = center_frequency;
    p.width = width;
    p.amplitude = amplitude;
    p.k = direction.normalized() * (center_frequency / c);
    p.polarization = polarization.normalized();
    p.validate(c);
    return p;
}

inline void check_zeta(int zeta) {
    if (zeta != 1 && zeta != -1) throw ModelError("conjugation index must be +1 or -1");
}

// A exp(-(t-T)^2 / 2 sigma^2) exp(-i Omega (t-T)) for zeta = +1, conjugate for -1.
inline cplx envelope_time(const Pulse& p, int zeta, double t) {
    check_zeta(zeta);
    const double s = t - p.center_time;
    const cplx plus = p.amplitude * std::exp(-s * s / (2.0 * p.width * p.width)) *
                      std::exp(-I * (p.center_frequency * s));
    return zeta == 1 ? plus : std::conj(plus);
}

// Analytic transform of envelope_time; accepts complex frequencies.
inline cplx envelope_freq(const Pulse& p, int zeta, cplx omega) {
    check_zeta(zeta);
    const cplx amp = zeta == 1 ? p.amplitude : std::conj(p.amplitude);
    const cplx detune = omega - double(zeta) * p.center_frequency;
    return amp * p.width * std::sqrt(2.0 * kPi) * std::exp(I * omega * p.center_time) *
           std::exp(-detune * detune * (p.width * p.width / 2.0));
}

// e^{i zeta k.r}
inline cplx spatial_phase(const Pulse& p, int zeta, const Vec3& r) {
    check_zeta(zeta);
    return std::exp(I * (double(zeta) * p.k.dot(r)));
}

} // namespace vmisim
