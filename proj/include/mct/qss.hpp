// qss.hpp
// Secret-sharing applications layered on the teleportation engine:
// classical two-bit messages carried by Bell states (with the receiver's
// deterministic readout), arbitrary-state quantum secrets with a chosen
// reconstructor, the controller-ignorance security properties, and the
// channel-setup eavesdropping check.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "protocol.hpp"

namespace mct {

// ---------------------------------------------------------------------------
// Classical message codec.  A two-bit message rides on one Bell state:
// the first bit is the Bell bit value, the second encodes the
// superposition sign (0 for +, 1 for -).

inline bell_outcome encode_classical(int bit1, int bit2) {
    if ((bit1 & ~1) || (bit2 & ~1))
        throw std::invalid_argument("encode_classical: bits must be 0 or 1");
    if (bit1 == 0) return bit2 == 0 ? bell_outcome::phi_plus : bell_outcome::psi_plus;
    return bit2 == 0 ? bell_outcome::psi_minus : bell_outcome::phi_minus;
}

inline std::array<int, 2> decode_classical(bell_outcome o) {
    switch (o) {
        case bell_outcome::phi_plus: return {0, 0};
        case bell_outcome::psi_plus: return {0, 1};
        case bell_outcome::psi_minus: return {1, 0};
        case bell_outcome::phi_minus: return {1, 1};
    }
    throw std::logic_error("decode_classical: bad outcome");
}

inline two_qubit_input bell_input(bell_outcome o) {
    const state_vector s = bell_state(o);
    return {s[0], s[1], s[2], s[3]};
}

// ---------------------------------------------------------------------------
// The receiver's recovery of the carried Bell state needs only the two
// ledger totals, not the individual outcomes.  One gate from {U0..U3}
// keyed (V_total, P_total) does it all:
//
//   even count: he holds Bell(V_total xor V_msg, P_total * P_msg); the
//     gate on his second wire undoes the totals, and a Bell measurement
//     reads the message directly.
//   odd count: he holds the product state |s.x>|t> with s = P_total *
//     P_msg, t = V_total xor V_msg.  The same gate, with its Z factor
//     moved to the first wire and its X factor kept on the second (the
//     form it takes once the protocol's CNOT is commuted through),
//     leaves |P_msg.x>|V_msg>, and the sigma_x (x) sigma_z product
//     measurement reads the message deterministically.

inline single_gate recovery_lookup(int v_total, int p_total) {
    if (v_total == 0) return p_total > 0 ? single_gate::u0 : single_gate::u1;
    return p_total > 0 ? single_gate::u2 : single_gate::u3;
}

// U3 factors as Z*X; these pick a gate's factors apart.
inline bool has_z_factor(single_gate g) { return g == single_gate::u1 || g == single_gate::u3; }
inline bool has_x_factor(single_gate g) { return g == single_gate::u2 || g == single_gate::u3; }

struct qss_trace {
    std::array<int, 2> message{};
    bell_outcome encoded = bell_outcome::phi_plus;
    std::size_t n = 0;
    channel_variant variant = channel_variant::x_second;
    std::vector<ledger_entry> ledger;
    int v_total = 0;
    int p_total = +1;
    single_gate recovery_gate = single_gate::u0;
    bool product_readout = false;  // odd n: sigma_x (x) sigma_z instead of a Bell measurement
    int readout_s = +1;            // x-basis sign on the first wire (product path)
    int readout_t = 0;             // z-basis bit on the second wire (product path)
    double readout_probability = 0.0;  // probability of the reported readout (1 when healthy)
    bell_outcome recovered = bell_outcome::phi_plus;
    std::array<int, 2> decoded{};
    double probability = 0.0;  // of the measurement branch taken

    bool round_trip_ok() const { return decoded == message; }
};

namespace detail {

// Probabilities of the four (s, t) results of measuring sigma_x on wire 0
// and sigma_z on wire 1 of a two-qubit state; index s*2+t with s in {0:+,1:-}.
inline std::array<double, 4> product_readout_probabilities(const state_vector& s2) {
    if (s2.num_qubits() != 2)
        throw std::invalid_argument("product readout: need a two-qubit state");
    const state_vector rotated = apply_single(s2, single_gate::h, 0);
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < 4; ++i) p[i] = std::norm(rotated[i]);
    // rotated index bits: (s, t) with s already mapped +->0, -->1
    return p;
}

inline bell_outcome outcome_from_product(int s, int t) {
    if (t == 0) return s > 0 ? bell_outcome::phi_plus : bell_outcome::phi_minus;
    return s > 0 ? bell_outcome::psi_plus : bell_outcome::psi_minus;
}

}  // namespace detail

// Run the classical-message flow end to end: the sender encodes two bits
// in the Bell state of her own pair, the cascade runs unchanged, the
// receiver applies the totals-keyed recovery and reads the message out —
// a Bell measurement for even controller counts, the sigma_x (x) sigma_z
// product measurement after the CNOT for odd ones.  Either readout is
// deterministic on a healthy channel.
inline qss_trace qss_run(std::array<int, 2> message, std::size_t n, channel_variant variant,
                         std::vector<measure_mode> modes = {}, std::mt19937_64* rng = nullptr) {
    if (variant == channel_variant::direct)
        throw std::invalid_argument("qss_run: the direct channel cannot carry a message");
    qss_trace trace;
    trace.message = message;
    trace.encoded = encode_classical(message[0], message[1]);
    trace.n = n;
    trace.variant = variant;

    detail::cascade_plan plan(n, variant, n + 1);
    detail::cascade_record rec =
        detail::run_cascade(bell_input(trace.encoded), plan, std::move(modes), rng);
    for (std::size_t step = 0; step < plan.steps(); ++step)
        trace.ledger.push_back({plan.labels[step], rec.outcomes[step]});
    trace.probability = rec.probability;

    const ledger_sums totals = ledger_totals(rec.outcomes);
    trace.v_total = totals.v_total;
    trace.p_total = totals.p_total;
    trace.recovery_gate = recovery_lookup(trace.v_total, trace.p_total);
    trace.product_readout = (parity_for(n) == rule_parity::odd);

    if (trace.product_readout) {
        state_vector held = rec.received;
        if (has_z_factor(trace.recovery_gate)) held = apply_single(held, single_gate::u1, 0);
        if (has_x_factor(trace.recovery_gate)) held = apply_single(held, single_gate::u2, 1);
        const auto p = detail::product_readout_probabilities(held);
        std::size_t best = 0;
        for (std::size_t i = 1; i < 4; ++i)
            if (p[i] > p[best]) best = i;
        trace.readout_s = (best & 2) ? -1 : +1;
        trace.readout_t = static_cast<int>(best & 1);
        trace.readout_probability = p[best];
        trace.recovered = detail::outcome_from_product(trace.readout_s, trace.readout_t);
    } else {
        const state_vector held = apply_single(rec.received, trace.recovery_gate, 1);
        auto branches = bell_measure(held, 0, 1, measure_mode::enumerate(), nullptr);
        const measure_branch* best = &branches.front();
        for (const auto& b : branches)
            if (b.probability > best->probability) best = &b;
        trace.readout_probability = best->probability;
        trace.recovered = best->outcome;
    }
    trace.decoded = decode_classical(trace.recovered);
    return trace;
}

// Re-derive the totals-keyed recovery gate per parity by brute force:
// for every ledger class, search the four candidate gates for the one
// whose readout is deterministic and decodes every message on every
// branch of the class.  Keyed v_total*2 + (p_total<0).
inline std::array<single_gate, 4> derive_recovery_table(rule_parity kind) {
    const std::size_t n = (kind == rule_parity::odd) ? 1 : 2;
    detail::cascade_plan plan(n, channel_variant::x_second, n + 1);

    std::array<std::array<bool, 4>, 4> viable{};  // [class][gate]
    for (auto& row : viable) row = {true, true, true, true};
    std::array<bool, 4> seen{};

    const std::size_t total = std::size_t{1} << (2 * (n + 2));
    std::vector<bell_outcome> outcomes(plan.steps());
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t rest = code;
        for (std::size_t i = 0; i < plan.steps(); ++i) {
            outcomes[i] = all_bell_outcomes[rest & 3];
            rest >>= 2;
        }
        const ledger_sums totals = ledger_totals(outcomes);
        const std::size_t cls =
            static_cast<std::size_t>(totals.v_total) * 2 + (totals.p_total > 0 ? 0 : 1);
        seen[cls] = true;

        for (bell_outcome msg : all_bell_outcomes) {
            const auto pre =
                detail::branch_pre_correction(plan, bell_input(msg), outcomes);
            for (int g = 0; g < 4; ++g) {
                if (!viable[cls][g]) continue;
                const auto gate = static_cast<single_gate>(g);
                state_vector held(2, {pre[0], pre[1], pre[2], pre[3]});
                bell_outcome read;
                double p_read;
                if (kind == rule_parity::odd) {
                    if (has_z_factor(gate)) held = apply_single(held, single_gate::u1, 0);
                    if (has_x_factor(gate)) held = apply_single(held, single_gate::u2, 1);
                    const auto p = detail::product_readout_probabilities(held);
                    std::size_t best = 0;
                    for (std::size_t i = 1; i < 4; ++i)
                        if (p[i] > p[best]) best = i;
                    read = detail::outcome_from_product((best & 2) ? -1 : +1,
                                                        static_cast<int>(best & 1));
                    p_read = p[best];
                } else {
                    held = apply_single(held, gate, 1);
                    auto branches = bell_measure(held, 0, 1, measure_mode::enumerate(), nullptr);
                    const measure_branch* best = &branches.front();
                    for (const auto& b : branches)
                        if (b.probability > best->probability) best = &b;
                    read = best->outcome;
                    p_read = best->probability;
                }
                if (std::abs(p_read - 1.0) > state_tol || read != msg) viable[cls][g] = false;
            }
        }
    }

    std::array<single_gate, 4> table{};
    for (std::size_t cls = 0; cls < 4; ++cls) {
        if (!seen[cls]) throw derivation_error("recovery derivation: class never reached");
        int found = -1;
        for (int g = 0; g < 4; ++g) {
            if (!viable[cls][g]) continue;
            if (found >= 0)
                throw derivation_error("recovery derivation: gate not unique for class " +
                                       std::to_string(cls));
            found = g;
        }
        if (found < 0)
            throw derivation_error("recovery derivation: no gate works for class " +
                                   std::to_string(cls));
        table[cls] = static_cast<single_gate>(found);
    }
    return table;
}

// Quantum secret sharing: any one agent, appointed receiver, reconstructs
// the shared two-qubit state once everyone else publishes.
inline teleport_trace share_quantum_secret(const two_qubit_input& input, std::size_t n,
                                           channel_variant variant, std::size_t receiver,
                                           std::vector<measure_mode> modes = {},
                                           std::mt19937_64* rng = nullptr) {
    return run_teleport(input, n, variant, std::move(modes), rng, receiver);
}

// ---------------------------------------------------------------------------
// Controller-ignorance properties.

// Probability of each Bell outcome at one cascade step, summed over all
// branches.  step indexes the measurement order (0 = xa1, 1 = yb1,
// 2.. = controllers).
inline std::array<double, 4> outcome_marginal(const two_qubit_input& input, std::size_t n,
                                              channel_variant variant, std::size_t step) {
    detail::cascade_plan plan(n, variant, n + 1);
    if (step >= plan.steps()) throw std::out_of_range("outcome_marginal: no such step");
    std::array<double, 4> marginal{};
    std::vector<bell_outcome> outcomes(plan.steps());

    auto walk = [&](auto&& self, const detail::cascade_state& cs, std::size_t at,
                    double prob) -> void {
        if (at == plan.steps()) {
            marginal[static_cast<std::size_t>(outcomes[step])] += prob;
            return;
        }
        const state_vector rotated = detail::rotate_for_step(plan, cs, at);
        for (bell_outcome o : all_bell_outcomes) {
            auto proj = detail::project_step(plan, cs, rotated, at, o);
            if (!proj.collapsed) continue;
            outcomes[at] = o;
            detail::cascade_state next{*proj.collapsed, cs.live};
            detail::drop_pair(plan, next, at);
            self(self, next, at + 1, prob * proj.probability);
        }
    };
    walk(walk, detail::start_cascade(input, plan), 0, 1.0);
    return marginal;
}

inline std::array<double, 4> outcome_marginal(std::array<int, 2> message, std::size_t n,
                                              channel_variant variant, std::size_t step) {
    return outcome_marginal(bell_input(encode_classical(message[0], message[1])), n, variant,
                            step);
}

// Average fidelity the receiver can reach when one controller withholds
// its outcome and he simply presumes phi+: exhaustive over branches,
// weighted by branch probability.  Strictly below 1 for a generic input.
inline double withheld_guess_fidelity(const two_qubit_input& input, std::size_t n,
                                      channel_variant variant, std::size_t withheld_step) {
    if (variant == channel_variant::direct)
        throw std::invalid_argument("withheld_guess_fidelity: direct channel not applicable");
    detail::cascade_plan plan(n, variant, n + 1);
    if (withheld_step < 2 || withheld_step >= plan.steps())
        throw std::out_of_range("withheld_guess_fidelity: step must name a controller");

    const state_vector target = input.to_state();
    double total = 0.0;
    std::vector<bell_outcome> outcomes(plan.steps());

    auto walk = [&](auto&& self, const detail::cascade_state& cs, std::size_t at,
                    double prob) -> void {
        if (at == plan.steps()) {
            std::vector<bell_outcome> assumed = outcomes;
            assumed[withheld_step] = bell_outcome::phi_plus;
            const ledger_sums totals = ledger_totals(assumed);
            const correction_rule rule =
                correction_lookup(bit_value(assumed[0]), totals.v_total, parity(assumed[1]),
                                  totals.p_total, parity_for(n));
            const state_vector pre = detail::finish_reception(plan, cs.st);
            total += prob * fidelity(detail::apply_correction(pre, rule), target);
            return;
        }
        const state_vector rotated = detail::rotate_for_step(plan, cs, at);
        for (bell_outcome o : all_bell_outcomes) {
            auto proj = detail::project_step(plan, cs, rotated, at, o);
            if (!proj.collapsed) continue;
            outcomes[at] = o;
            detail::cascade_state next{*proj.collapsed, cs.live};
            detail::drop_pair(plan, next, at);
            self(self, next, at + 1, prob * proj.probability);
        }
    };
    walk(walk, detail::start_cascade(input, plan), 0, 1.0);
    return total;
}

// ---------------------------------------------------------------------------
// Channel setup with eavesdropping checks.  Sample rounds interleave
// GHZ z-correlation checks, GHZ x-parity checks, and phi+ decoy pairs;
// an intercept-resend attacker grabbing one flying qubit per attacked
// round in a random basis trips each check type with probability 1/4.

struct eavesdrop_model {
    enum class kind_t { none, intercept_resend };
    kind_t kind = kind_t::none;
    double attack_probability = 0.0;  // fraction of rounds attacked

    static eavesdrop_model none() { return {kind_t::none, 0.0}; }
    static eavesdrop_model intercept_resend(double p = 1.0) {
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("intercept_resend: probability must be in [0,1]");
        return {kind_t::intercept_resend, p};
    }
};

struct channel_report {
    std::size_t rounds = 0;
    std::size_t ghz_z_rounds = 0;
    std::size_t ghz_x_rounds = 0;
    std::size_t decoy_rounds = 0;
    std::size_t errors = 0;
    double error_rate = 0.0;
    double analytic_error_rate = 0.0;  // for the configured attacker
    double threshold = 0.0;
    bool aborted = false;
};

namespace detail {

// Collapse one wire onto a sampled z eigenstate, keeping the wire.
inline int measure_z_keep(state_vector& st, std::size_t wire, std::mt19937_64& rng) {
    const std::size_t bit = std::size_t{1} << (st.num_qubits() - 1 - wire);
    double p1 = 0.0;
    for (std::size_t i = 0; i < st.dim(); ++i)
        if (i & bit) p1 += std::norm(st[i]);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int got = (u(rng) < p1) ? 1 : 0;
    std::vector<cx> amp(st.dim());
    for (std::size_t i = 0; i < st.dim(); ++i)
        amp[i] = (((i & bit) != 0) == (got == 1)) ? st[i] : cx{0, 0};
    state_vector collapsed(st.num_qubits(), std::move(amp));
    collapsed.renormalize();
    st = collapsed;
    return got;
}

inline int measure_x_keep(state_vector& st, std::size_t wire, std::mt19937_64& rng) {
    st = apply_single(st, single_gate::h, wire);
    const int got = measure_z_keep(st, wire, rng);
    st = apply_single(st, single_gate::h, wire);
    return got;
}

// Sample a full computational-basis readout of every wire at once.
inline std::vector<int> sample_all_z(const state_vector& st, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double roll = u(rng);
    std::size_t picked = st.dim() - 1;
    for (std::size_t i = 0; i < st.dim(); ++i) {
        roll -= std::norm(st[i]);
        if (roll <= 0.0) { picked = i; break; }
    }
    std::vector<int> bits(st.num_qubits());
    for (std::size_t q = 0; q < st.num_qubits(); ++q)
        bits[q] = static_cast<int>((picked >> (st.num_qubits() - 1 - q)) & 1);
    return bits;
}

inline std::vector<int> sample_all_x(state_vector st, std::mt19937_64& rng) {
    for (std::size_t q = 0; q < st.num_qubits(); ++q) st = apply_single(st, single_gate::h, q);
    return sample_all_z(st, rng);
}

// The attacker's move: measure one flying wire in a random basis and pass
// the eigenstate along.
inline void intercept_wire(state_vector& st, std::size_t wire, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    if (coin(rng) == 0)
        measure_z_keep(st, wire, rng);
    else
        measure_x_keep(st, wire, rng);
}

}  // namespace detail

// Distribute and spot-check the channels before any run: every sample
// round prepares a real (n+2)-party GHZ state or a phi+ decoy pair,
// optionally lets the attacker at one flying qubit, and tests the
// advertised correlation.  Aborts when the observed error rate crosses
// the threshold.
inline channel_report setup_channel(std::size_t n, std::size_t rounds,
                                    const eavesdrop_model& eve, double threshold,
                                    std::mt19937_64& rng) {
    channel_report report;
    report.rounds = rounds;
    report.threshold = threshold;
    if (eve.kind == eavesdrop_model::kind_t::intercept_resend)
        report.analytic_error_rate = eve.attack_probability * 0.25;

    const std::size_t k = n + 2;  // parties on one GHZ channel
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> kind_die(0, 2);

    for (std::size_t round = 0; round < rounds; ++round) {
        const int kind = kind_die(rng);
        const bool attacked = eve.kind == eavesdrop_model::kind_t::intercept_resend &&
                              u(rng) < eve.attack_probability;
        bool error = false;
        if (kind == 2) {
            // decoy pair: keeper holds wire 0, wire 1 flies
            ++report.decoy_rounds;
            state_vector pair = bell_state(bell_outcome::phi_plus);
            if (attacked) detail::intercept_wire(pair, 1, rng);
            std::uniform_int_distribution<int> basis(0, 1);
            const auto bits = basis(rng) == 0 ? detail::sample_all_z(pair, rng)
                                              : detail::sample_all_x(std::move(pair), rng);
            error = bits[0] != bits[1];  // phi+ agrees in both bases
        } else {
            state_vector ghz = make_ghz(k, ghz_basis::z);
            if (attacked) {
                // wires 1..k-1 fly; the preparer keeps wire 0
                std::uniform_int_distribution<std::size_t> which(1, k - 1);
                detail::intercept_wire(ghz, which(rng), rng);
            }
            if (kind == 0) {
                ++report.ghz_z_rounds;
                const auto bits = detail::sample_all_z(ghz, rng);
                for (std::size_t q = 1; q < k; ++q) error = error || bits[q] != bits[0];
            } else {
                ++report.ghz_x_rounds;
                const auto bits = detail::sample_all_x(std::move(ghz), rng);
                int minus = 0;
                for (int b : bits) minus ^= b;
                error = minus != 0;  // x parity of a GHZ state is even
            }
        }
        if (error) ++report.errors;
    }
    report.error_rate =
        rounds == 0 ? 0.0 : static_cast<double>(report.errors) / static_cast<double>(rounds);
    report.aborted = report.error_rate > threshold;
    return report;
}

}  // namespace mct
