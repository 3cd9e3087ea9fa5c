// statevec.hpp
// Dense pure-state simulation of small labeled qubit registers:
// basis states, single-qubit gates, CNOT, pair projection, comparisons.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mct {

using cx = std::complex<double>;

// Absolute tolerances used throughout: states compare at 1e-10,
// norms and probabilities at 1e-12.
inline constexpr double state_tol = 1e-10;
inline constexpr double norm_tol = 1e-12;

// A normalized pure state over num_qubits wires.  Wire 0 is the most
// significant bit of the amplitude index; a register is an ordered list
// of wires and every routine below uses that one convention.
class state_vector {
public:
    state_vector() : num_qubits_(0), amp_(1, cx{1.0, 0.0}) {}

    state_vector(std::size_t num_qubits, std::vector<cx> amplitudes)
        : num_qubits_(num_qubits), amp_(std::move(amplitudes)) {
        if (amp_.size() != (std::size_t{1} << num_qubits_))
            throw std::invalid_argument("state_vector: amplitude count must be 2^num_qubits");
    }

    std::size_t num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return amp_.size(); }

    const cx& operator[](std::size_t i) const { return amp_[i]; }
    cx& operator[](std::size_t i) { return amp_[i]; }

    const std::vector<cx>& amplitudes() const { return amp_; }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amp_) s += std::norm(a);
        return std::sqrt(s);
    }

    void renormalize() {
        const double n = norm();
        if (n <= norm_tol)
            throw std::invalid_argument("state_vector: cannot normalize a zero state");
        for (auto& a : amp_) a /= n;
    }

private:
    std::size_t num_qubits_;
    std::vector<cx> amp_;
};

// The four correction operations plus the Hadamard.  u3 is exactly
// |0><1| - |1><0| (u3|0> = -|1>, u3|1> = |0>); it is not the Pauli Y,
// and the sign convention is load-bearing for the correction tables.
enum class single_gate { u0, u1, u2, u3, h };

// Row-major 2x2 matrix {m00, m01, m10, m11}.
inline std::array<cx, 4> gate_matrix(single_gate g) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (g) {
        case single_gate::u0: return {cx{1, 0}, cx{0, 0}, cx{0, 0}, cx{1, 0}};
        case single_gate::u1: return {cx{1, 0}, cx{0, 0}, cx{0, 0}, cx{-1, 0}};
        case single_gate::u2: return {cx{0, 0}, cx{1, 0}, cx{1, 0}, cx{0, 0}};
        case single_gate::u3: return {cx{0, 0}, cx{1, 0}, cx{-1, 0}, cx{0, 0}};
        case single_gate::h: return {cx{s, 0}, cx{s, 0}, cx{s, 0}, cx{-s, 0}};
    }
    throw std::invalid_argument("gate_matrix: unknown gate");
}

inline std::string gate_name(single_gate g) {
    switch (g) {
        case single_gate::u0: return "U0";
        case single_gate::u1: return "U1";
        case single_gate::u2: return "U2";
        case single_gate::u3: return "U3";
        case single_gate::h: return "H";
    }
    return "?";
}

// The unknown two-qubit input (a,b,c,d) over wires (x,y).
struct two_qubit_input {
    cx a, b, c, d;

    std::array<cx, 4> as_array() const { return {a, b, c, d}; }

    double norm() const {
        return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
    }

    state_vector to_state() const {
        return state_vector(2, {a, b, c, d});
    }
};

inline state_vector make_basis_state(std::size_t num_qubits, const std::string& bits) {
    if (bits.size() != num_qubits || num_qubits == 0)
        throw std::invalid_argument("make_basis_state: bit string length must equal num_qubits");
    std::size_t idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("make_basis_state: bits must be 0 or 1");
        idx = (idx << 1) | static_cast<std::size_t>(c - '0');
    }
    std::vector<cx> amp(std::size_t{1} << num_qubits, cx{0, 0});
    amp[idx] = cx{1, 0};
    return state_vector(num_qubits, std::move(amp));
}

inline state_vector tensor(const state_vector& lhs, const state_vector& rhs) {
    std::vector<cx> amp(lhs.dim() * rhs.dim());
    for (std::size_t i = 0; i < lhs.dim(); ++i)
        for (std::size_t j = 0; j < rhs.dim(); ++j)
            amp[i * rhs.dim() + j] = lhs[i] * rhs[j];
    return state_vector(lhs.num_qubits() + rhs.num_qubits(), std::move(amp));
}

inline state_vector apply_single(const state_vector& state, single_gate gate, std::size_t target) {
    if (target >= state.num_qubits())
        throw std::out_of_range("apply_single: target wire out of range");
    const auto m = gate_matrix(gate);
    const std::size_t shift = state.num_qubits() - 1 - target;
    const std::size_t bit = std::size_t{1} << shift;
    std::vector<cx> amp(state.amplitudes());
    for (std::size_t i = 0; i < amp.size(); ++i) {
        if (i & bit) continue;
        const cx a0 = amp[i];
        const cx a1 = amp[i | bit];
        amp[i] = m[0] * a0 + m[1] * a1;
        amp[i | bit] = m[2] * a0 + m[3] * a1;
    }
    return state_vector(state.num_qubits(), std::move(amp));
}

inline state_vector apply_cnot(const state_vector& state, std::size_t control, std::size_t target) {
    if (control >= state.num_qubits() || target >= state.num_qubits())
        throw std::out_of_range("apply_cnot: wire out of range");
    if (control == target)
        throw std::invalid_argument("apply_cnot: control and target must differ");
    const std::size_t cbit = std::size_t{1} << (state.num_qubits() - 1 - control);
    const std::size_t tbit = std::size_t{1} << (state.num_qubits() - 1 - target);
    std::vector<cx> amp(state.amplitudes());
    for (std::size_t i = 0; i < amp.size(); ++i)
        if ((i & cbit) && !(i & tbit)) std::swap(amp[i], amp[i | tbit]);
    return state_vector(state.num_qubits(), std::move(amp));
}

struct pair_projection {
    double probability = 0.0;
    // Present iff probability > 0: wires i and j removed, renormalized.
    std::optional<state_vector> collapsed;
};

// Project wires (i,j) onto a normalized 2-qubit basis_state; wire i maps to
// the more significant bit of basis_state.  The measured wires are removed
// from the register.
inline pair_projection project_pair(const state_vector& state, const state_vector& basis_state,
                                    std::size_t i, std::size_t j) {
    if (basis_state.num_qubits() != 2)
        throw std::invalid_argument("project_pair: basis_state must have exactly 2 qubits");
    if (i >= state.num_qubits() || j >= state.num_qubits())
        throw std::out_of_range("project_pair: wire out of range");
    if (i == j)
        throw std::invalid_argument("project_pair: wires must differ");
    if (state.num_qubits() < 2)
        throw std::invalid_argument("project_pair: register too small");

    const std::size_t nq = state.num_qubits();
    std::vector<cx> rest(std::size_t{1} << (nq - 2), cx{0, 0});
    for (std::size_t idx = 0; idx < state.dim(); ++idx) {
        const std::size_t bi = (idx >> (nq - 1 - i)) & 1;
        const std::size_t bj = (idx >> (nq - 1 - j)) & 1;
        std::size_t rem = 0;
        for (std::size_t w = 0; w < nq; ++w) {
            if (w == i || w == j) continue;
            rem = (rem << 1) | ((idx >> (nq - 1 - w)) & 1);
        }
        rest[rem] += std::conj(basis_state[(bi << 1) | bj]) * state[idx];
    }

    pair_projection out;
    double p = 0.0;
    for (const auto& a : rest) p += std::norm(a);
    out.probability = p;
    if (p > norm_tol) {
        const double scale = 1.0 / std::sqrt(p);
        for (auto& a : rest) a *= scale;
        out.collapsed = state_vector(nq - 2, std::move(rest));
    }
    return out;
}

inline cx inner_product(const state_vector& s1, const state_vector& s2) {
    if (s1.num_qubits() != s2.num_qubits())
        throw std::invalid_argument("inner_product: qubit count mismatch");
    cx acc{0, 0};
    for (std::size_t i = 0; i < s1.dim(); ++i) acc += std::conj(s1[i]) * s2[i];
    return acc;
}

inline double fidelity(const state_vector& s1, const state_vector& s2) {
    return std::norm(inner_product(s1, s2));
}

// If s1 == lambda * s2 for a unit-modulus lambda (within tol in vector
// norm), return lambda; otherwise nullopt.
inline std::optional<cx> global_phase_between(const state_vector& s1, const state_vector& s2,
                                              double tol = state_tol) {
    if (s1.num_qubits() != s2.num_qubits())
        throw std::invalid_argument("global_phase_between: qubit count mismatch");
    std::size_t pivot = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < s2.dim(); ++i) {
        const double m = std::abs(s2[i]);
        if (m > best) { best = m; pivot = i; }
    }
    if (best <= norm_tol) return std::nullopt;
    cx lambda = s1[pivot] / s2[pivot];
    const double mod = std::abs(lambda);
    if (mod <= norm_tol) return std::nullopt;
    lambda /= mod;
    double dev2 = 0.0;
    for (std::size_t i = 0; i < s1.dim(); ++i) dev2 += std::norm(s1[i] - lambda * s2[i]);
    if (std::sqrt(dev2) > tol) return std::nullopt;
    return lambda;
}

inline bool equal_up_to_global_phase(const state_vector& s1, const state_vector& s2,
                                     double tol = state_tol) {
    return global_phase_between(s1, s2, tol).has_value();
}

}  // namespace mct
