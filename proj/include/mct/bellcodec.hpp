// bellcodec.hpp
// Bell basis construction and measurement, plus the classical (V, P)
// bookkeeping: bit value V distinguishes parallel from antiparallel
// pairs, parity P is the sign inside the superposition, and the ledger
// totals are the XOR / product over all published outcomes.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "statevec.hpp"

namespace mct {

enum class bell_outcome : std::uint8_t { phi_plus, phi_minus, psi_plus, psi_minus };

inline constexpr std::array<bell_outcome, 4> all_bell_outcomes = {
    bell_outcome::phi_plus, bell_outcome::phi_minus,
    bell_outcome::psi_plus, bell_outcome::psi_minus};

// Thrown when a forced measurement asks for an outcome of probability zero.
struct impossible_branch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline state_vector bell_state(bell_outcome o) {
    const double s = 1.0 / std::sqrt(2.0);
    switch (o) {
        case bell_outcome::phi_plus: return state_vector(2, {cx{s, 0}, cx{0, 0}, cx{0, 0}, cx{s, 0}});
        case bell_outcome::phi_minus: return state_vector(2, {cx{s, 0}, cx{0, 0}, cx{0, 0}, cx{-s, 0}});
        case bell_outcome::psi_plus: return state_vector(2, {cx{0, 0}, cx{s, 0}, cx{s, 0}, cx{0, 0}});
        case bell_outcome::psi_minus: return state_vector(2, {cx{0, 0}, cx{s, 0}, cx{-s, 0}, cx{0, 0}});
    }
    throw std::invalid_argument("bell_state: unknown outcome");
}

// V: 0 for phi (parallel bits), 1 for psi (antiparallel bits).
inline int bit_value(bell_outcome o) {
    return (o == bell_outcome::psi_plus || o == bell_outcome::psi_minus) ? 1 : 0;
}

// P: +1 for the '+' superposition sign, -1 for '-'.
inline int parity(bell_outcome o) {
    return (o == bell_outcome::phi_minus || o == bell_outcome::psi_minus) ? -1 : +1;
}

inline std::string outcome_name(bell_outcome o) {
    switch (o) {
        case bell_outcome::phi_plus: return "phi+";
        case bell_outcome::phi_minus: return "phi-";
        case bell_outcome::psi_plus: return "psi+";
        case bell_outcome::psi_minus: return "psi-";
    }
    return "?";
}

inline std::optional<bell_outcome> outcome_from_name(const std::string& name) {
    for (bell_outcome o : all_bell_outcomes)
        if (outcome_name(o) == name) return o;
    return std::nullopt;
}

// Identify a normalized 2-qubit state as a Bell state up to global phase.
inline std::optional<bell_outcome> classify_bell(const state_vector& s, double tol = state_tol) {
    if (s.num_qubits() != 2)
        throw std::invalid_argument("classify_bell: expected a 2-qubit state");
    for (bell_outcome o : all_bell_outcomes)
        if (equal_up_to_global_phase(s, bell_state(o), tol)) return o;
    return std::nullopt;
}

struct ledger_sums {
    int v_total = 0;   // XOR of bit values
    int p_total = +1;  // product of parities
};

inline ledger_sums ledger_totals(const std::vector<bell_outcome>& outcomes) {
    if (outcomes.empty())
        throw std::invalid_argument("ledger_totals: empty outcome sequence");
    ledger_sums t;
    for (bell_outcome o : outcomes) {
        t.v_total ^= bit_value(o);
        t.p_total *= parity(o);
    }
    return t;
}

// How one Bell measurement resolves: drawn by the Born rule from a seeded
// generator, forced to a named outcome, or enumerated over all branches.
struct measure_mode {
    enum class kind_t : std::uint8_t { sample, forced, enumerate_all };

    kind_t kind = kind_t::sample;
    bell_outcome forced_outcome = bell_outcome::phi_plus;

    static measure_mode sample() { return {kind_t::sample, bell_outcome::phi_plus}; }
    static measure_mode forced(bell_outcome o) { return {kind_t::forced, o}; }
    static measure_mode enumerate() { return {kind_t::enumerate_all, bell_outcome::phi_plus}; }
};

struct measure_branch {
    bell_outcome outcome;
    double probability;
    state_vector collapsed;  // wires i and j removed
};

// Bell-basis measurement of wires (i, j).  Enumerate returns every branch
// with nonzero probability; Forced returns the requested branch or throws
// impossible_branch; Sample draws one branch using the caller's generator
// (no hidden RNG lives in the library).
inline std::vector<measure_branch> bell_measure(const state_vector& state, std::size_t i,
                                                std::size_t j, measure_mode mode,
                                                std::mt19937_64* rng = nullptr) {
    std::array<pair_projection, 4> proj;
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        proj[k] = project_pair(state, bell_state(all_bell_outcomes[k]), i, j);
        total += proj[k].probability;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::logic_error("bell_measure: branch probabilities do not sum to 1");

    auto branch_of = [&](std::size_t k) -> measure_branch {
        return {all_bell_outcomes[k], proj[k].probability, *proj[k].collapsed};
    };

    switch (mode.kind) {
        case measure_mode::kind_t::enumerate_all: {
            std::vector<measure_branch> out;
            for (std::size_t k = 0; k < 4; ++k)
                if (proj[k].collapsed) out.push_back(branch_of(k));
            return out;
        }
        case measure_mode::kind_t::forced: {
            const auto k = static_cast<std::size_t>(mode.forced_outcome);
            if (!proj[k].collapsed)
                throw impossible_branch("bell_measure: forced outcome " +
                                        outcome_name(mode.forced_outcome) +
                                        " has probability zero");
            return {branch_of(k)};
        }
        case measure_mode::kind_t::sample: {
            if (rng == nullptr)
                throw std::invalid_argument("bell_measure: sample mode needs a generator");
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            double u = dist(*rng) * total;
            for (std::size_t k = 0; k < 4; ++k) {
                u -= proj[k].probability;
                if (u <= 0.0 && proj[k].collapsed) return {branch_of(k)};
            }
            for (std::size_t k = 4; k-- > 0;)
                if (proj[k].collapsed) return {branch_of(k)};
            throw std::logic_error("bell_measure: sampling failed");
        }
    }
    throw std::invalid_argument("bell_measure: unknown mode");
}

}  // namespace mct
