// netsim.hpp
// Deterministic multi-party session harness: the sender, controllers,
// and receiver run as little state machines on a round-robin bus, so a
// whole run - including a controller who refuses to publish - can be
// observed message by message.  Also the resource-efficiency summary.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "protocol.hpp"

namespace mct {

// ---------------------------------------------------------------------------
// Resource accounting for one session at controller count n: two useful
// qubits arrive, 2(n+2) qubits travel (both channels), and each of the
// n+2 Bell measurements costs two classical bits.  Channel-setup sample
// and decoy rounds are deliberately left out of the denominators.

struct efficiency_summary {
    std::size_t n = 0;
    std::size_t useful_qubits = 0;
    std::size_t transmitted_qubits = 0;
    std::size_t classical_bits = 0;
    double qubit_efficiency = 0.0;  // useful / transmitted
    double total_efficiency = 0.0;  // useful / (transmitted + classical)
    bool excludes_setup_overhead = true;
};

inline efficiency_summary efficiency_report(std::size_t n) {
    efficiency_summary s;
    s.n = n;
    s.useful_qubits = 2;
    s.transmitted_qubits = 2 * (n + 2);
    s.classical_bits = 2 * (n + 2);
    s.qubit_efficiency =
        static_cast<double>(s.useful_qubits) / static_cast<double>(s.transmitted_qubits);
    s.total_efficiency = static_cast<double>(s.useful_qubits) /
                         static_cast<double>(s.transmitted_qubits + s.classical_bits);
    return s;
}

// ---------------------------------------------------------------------------
// Session simulation.

struct broadcast_msg {
    std::string from;
    std::string label;
    bell_outcome outcome;
};

enum class session_status { reconstructed, unreconstructable };

struct session_record {
    session_status status = session_status::unreconstructable;
    std::size_t rounds = 0;  // bus cycles until the receiver finished or gave up
    std::vector<broadcast_msg> broadcasts;
    std::vector<std::string> log;
    teleport_trace trace;  // ground-truth record of the run (all outcomes)
    // 1 on reconstruction; otherwise the best the receiver can do by
    // averaging his guess over the withheld outcomes.
    double receiver_fidelity = 0.0;
};

namespace detail {

// Average fidelity over uniform guesses for the outcomes the receiver
// never saw, correcting the true received state with each guessed rule.
inline double average_guess_fidelity(const cascade_plan& plan, const state_vector& pre,
                                     const state_vector& target,
                                     const std::vector<bell_outcome>& outcomes,
                                     const std::vector<std::size_t>& missing_steps) {
    const std::size_t combos = std::size_t{1} << (2 * missing_steps.size());
    std::vector<bell_outcome> assumed = outcomes;
    double total = 0.0;
    for (std::size_t code = 0; code < combos; ++code) {
        std::size_t rest = code;
        for (std::size_t m : missing_steps) {
            assumed[m] = all_bell_outcomes[rest & 3];
            rest >>= 2;
        }
        const ledger_sums totals = ledger_totals(assumed);
        const correction_rule rule =
            correction_lookup(bit_value(assumed[0]), totals.v_total, parity(assumed[1]),
                              totals.p_total, parity_for(plan.n));
        total += fidelity(apply_correction(pre, rule), target);
    }
    return total / static_cast<double>(combos);
}

}  // namespace detail

// Play one session over the bus.  Controllers named in silent_controllers
// (agent indices 1..n) measure but never publish; the receiver then has
// to give up and the record shows what that silence costs him.
inline session_record simulate_session(const two_qubit_input& input, std::size_t n,
                                       channel_variant variant, std::mt19937_64& rng,
                                       const std::vector<std::size_t>& silent_controllers = {}) {
    if (variant == channel_variant::direct)
        throw std::invalid_argument("simulate_session: direct channel has no session protocol");
    for (std::size_t c : silent_controllers)
        if (c < 1 || c > n)
            throw std::out_of_range("simulate_session: silent controller index out of range");

    detail::cascade_plan plan(n, variant, n + 1);
    auto is_silent = [&](std::size_t agent) {
        return std::find(silent_controllers.begin(), silent_controllers.end(), agent) !=
               silent_controllers.end();
    };

    session_record rec;
    rec.trace.input = input;
    rec.trace.n = n;
    rec.trace.variant = variant;
    rec.trace.receiver = n + 1;
    rec.trace.probability = 1.0;

    detail::cascade_state cs = detail::start_cascade(input, plan);
    std::vector<bell_outcome> outcomes(plan.steps());
    std::vector<bool> measured(plan.steps(), false);
    std::vector<std::size_t> missing_steps;

    auto measure_step = [&](std::size_t step, const std::string& who) {
        const state_vector rotated = detail::rotate_for_step(plan, cs, step);
        auto branches = bell_measure(rotated, cs.pos(plan.pairs[step][0]),
                                     cs.pos(plan.pairs[step][1]), measure_mode::sample(), &rng);
        const measure_branch& br = branches.front();
        outcomes[step] = br.outcome;
        measured[step] = true;
        rec.trace.probability *= br.probability;
        cs.st = br.collapsed;
        detail::drop_pair(plan, cs, step);
        rec.log.push_back(who + ": measured (" + plan.labels[step] + ") -> " +
                          outcome_name(br.outcome));
    };
    auto publish_step = [&](std::size_t step, const std::string& who) {
        rec.broadcasts.push_back({who, plan.labels[step], outcomes[step]});
        rec.log.push_back(who + ": broadcast " + plan.labels[step] + " = " +
                          outcome_name(outcomes[step]));
    };

    bool receiver_done = false;
    const std::size_t max_rounds = n + 4;  // generous; one round suffices here
    for (std::size_t round = 0; round < max_rounds && !receiver_done; ++round) {
        rec.rounds = round + 1;
        // sender's turn: both her measurements, both broadcasts
        if (!measured[0]) {
            measure_step(0, "alice");
            measure_step(1, "alice");
            publish_step(0, "alice");
            publish_step(1, "alice");
        }
        // controllers in chain order
        for (std::size_t agent = 1; agent <= n; ++agent) {
            const std::size_t step = agent + 1;
            const std::string who = "charlie" + std::to_string(agent);
            if (!measured[step]) {
                measure_step(step, who);
                if (is_silent(agent)) {
                    rec.log.push_back(who + ": withholds " + plan.labels[step]);
                    missing_steps.push_back(step);
                } else {
                    publish_step(step, who);
                }
            }
        }
        // receiver's turn
        const std::size_t have = rec.broadcasts.size();
        if (have == plan.steps()) {
            rec.trace.pre_correction = detail::finish_reception(plan, cs.st);
            const ledger_sums totals = ledger_totals(outcomes);
            rec.trace.v_xa1 = bit_value(outcomes[0]);
            rec.trace.p_yb1 = parity(outcomes[1]);
            rec.trace.v_total = totals.v_total;
            rec.trace.p_total = totals.p_total;
            rec.trace.corrected = true;
            rec.trace.rule = correction_lookup(rec.trace.v_xa1, rec.trace.v_total,
                                               rec.trace.p_yb1, rec.trace.p_total, parity_for(n));
            rec.trace.post_correction =
                detail::apply_correction(rec.trace.pre_correction, rec.trace.rule);
            rec.trace.fidelity_value = fidelity(rec.trace.post_correction, input.to_state());
            rec.trace.global_phase =
                global_phase_between(rec.trace.post_correction, input.to_state());
            rec.receiver_fidelity = rec.trace.fidelity_value;
            rec.status = session_status::reconstructed;
            rec.log.push_back("bob: applied " + gate_name(rec.trace.rule.u_on_a) + " (x) " +
                              gate_name(rec.trace.rule.u_on_b) +
                              (rec.trace.rule.apply_cnot ? " + cnot" : "") +
                              ", fidelity = " + std::to_string(rec.trace.fidelity_value));
            receiver_done = true;
        } else if (std::all_of(measured.begin(), measured.end(), [](bool b) { return b; })) {
            // everyone has acted; the gap is permanent
            rec.trace.pre_correction = detail::finish_reception(plan, cs.st);
            const ledger_sums totals = ledger_totals(outcomes);
            rec.trace.v_xa1 = bit_value(outcomes[0]);
            rec.trace.p_yb1 = parity(outcomes[1]);
            rec.trace.v_total = totals.v_total;
            rec.trace.p_total = totals.p_total;
            rec.trace.corrected = false;
            rec.trace.post_correction = rec.trace.pre_correction;
            rec.trace.fidelity_value =
                fidelity(rec.trace.pre_correction, input.to_state());
            rec.receiver_fidelity = detail::average_guess_fidelity(
                plan, rec.trace.pre_correction, input.to_state(), outcomes, missing_steps);
            rec.status = session_status::unreconstructable;
            rec.log.push_back("bob: " + std::to_string(plan.steps() - have) +
                              " broadcast(s) missing; best average guess fidelity = " +
                              std::to_string(rec.receiver_fidelity));
            receiver_done = true;
        } else {
            rec.log.push_back("bob: waiting (" + std::to_string(plan.steps() - have) +
                              " broadcast(s) outstanding)");
        }
    }

    for (std::size_t step = 0; step < plan.steps(); ++step)
        rec.trace.ledger.push_back({plan.labels[step], outcomes[step]});
    return rec;
}

}  // namespace mct
