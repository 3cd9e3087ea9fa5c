// trace_json.hpp
// JSON form of a run trace (schema version "1").  The document carries
// the configuration, the outcome ledger with per-measurement bit value
// and parity, the two totals, the applied correction, fidelity, global
// phase, and the session's resource summary.  States themselves are not
// serialized; parsing a document yields a trace whose state fields are
// empty.  print/parse round-trips bit-exactly on the schema fields.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "netsim.hpp"
#include "protocol.hpp"

namespace mct {

inline constexpr const char* trace_schema_version = "1";

namespace detail {

inline single_gate gate_from_name(const std::string& name) {
    for (int g = 0; g < 5; ++g)
        if (gate_name(static_cast<single_gate>(g)) == name) return static_cast<single_gate>(g);
    throw std::invalid_argument("trace: unknown gate name '" + name + "'");
}

inline nlohmann::json complex_to_json(const cx& z) {
    return nlohmann::json::array({z.real(), z.imag()});
}

inline cx complex_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("trace: complex values are [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline nlohmann::json trace_to_json(const teleport_trace& trace) {
    nlohmann::json doc;
    doc["schema"] = trace_schema_version;

    nlohmann::json config;
    config["n"] = trace.n;
    config["variant"] = variant_name(trace.variant);
    config["receiver"] = trace.receiver;
    config["input"] = nlohmann::json::array({detail::complex_to_json(trace.input.a),
                                             detail::complex_to_json(trace.input.b),
                                             detail::complex_to_json(trace.input.c),
                                             detail::complex_to_json(trace.input.d)});
    doc["config"] = config;

    nlohmann::json ledger = nlohmann::json::array();
    for (const auto& entry : trace.ledger) {
        ledger.push_back({{"label", entry.label},
                          {"outcome", outcome_name(entry.outcome)},
                          {"v", bit_value(entry.outcome)},
                          {"p", parity(entry.outcome)}});
    }
    doc["ledger"] = ledger;
    doc["v_total"] = trace.v_total;
    doc["p_total"] = trace.p_total;

    if (trace.corrected) {
        doc["correction"] = {{"ua", gate_name(trace.rule.u_on_a)},
                             {"ub", gate_name(trace.rule.u_on_b)},
                             {"cnot", trace.rule.apply_cnot}};
    } else {
        doc["correction"] = nullptr;
    }
    doc["fidelity"] = trace.fidelity_value;
    doc["global_phase"] = trace.global_phase
                              ? detail::complex_to_json(*trace.global_phase)
                              : nlohmann::json(nullptr);
    const efficiency_summary eff = efficiency_report(trace.n);
    doc["efficiency"] = {{"n", eff.n},
                         {"useful_qubits", eff.useful_qubits},
                         {"transmitted_qubits", eff.transmitted_qubits},
                         {"classical_bits", eff.classical_bits},
                         {"qubit_efficiency", eff.qubit_efficiency},
                         {"total_efficiency", eff.total_efficiency},
                         {"excludes_setup_overhead", eff.excludes_setup_overhead}};
    return doc;
}

inline teleport_trace trace_from_json(const nlohmann::json& doc) {
    if (!doc.contains("schema") || doc["schema"].get<std::string>() != trace_schema_version)
        throw std::invalid_argument("trace: missing or unsupported schema version");

    teleport_trace trace;
    const auto& config = doc.at("config");
    trace.n = config.at("n").get<std::size_t>();
    trace.variant = variant_from_name(config.at("variant").get<std::string>());
    trace.receiver = config.at("receiver").get<std::size_t>();
    const auto& input = config.at("input");
    if (!input.is_array() || input.size() != 4)
        throw std::invalid_argument("trace: input must hold four amplitudes");
    trace.input = {detail::complex_from_json(input[0]), detail::complex_from_json(input[1]),
                   detail::complex_from_json(input[2]), detail::complex_from_json(input[3])};

    for (const auto& entry : doc.at("ledger")) {
        const std::string name = entry.at("outcome").get<std::string>();
        const auto outcome = outcome_from_name(name);
        if (!outcome) throw std::invalid_argument("trace: unknown outcome '" + name + "'");
        if (entry.at("v").get<int>() != bit_value(*outcome) ||
            entry.at("p").get<int>() != parity(*outcome))
            throw std::invalid_argument("trace: ledger entry disagrees with its outcome");
        trace.ledger.push_back({entry.at("label").get<std::string>(), *outcome});
    }
    trace.v_total = doc.at("v_total").get<int>();
    trace.p_total = doc.at("p_total").get<int>();
    if (!trace.ledger.empty()) {
        trace.v_xa1 = bit_value(trace.ledger[0].outcome);
        if (trace.ledger.size() > 1) trace.p_yb1 = parity(trace.ledger[1].outcome);
    }

    if (doc.at("correction").is_null()) {
        trace.corrected = false;
    } else {
        const auto& corr = doc.at("correction");
        trace.corrected = true;
        trace.rule.u_on_a = detail::gate_from_name(corr.at("ua").get<std::string>());
        trace.rule.u_on_b = detail::gate_from_name(corr.at("ub").get<std::string>());
        trace.rule.apply_cnot = corr.at("cnot").get<bool>();
    }
    trace.fidelity_value = doc.at("fidelity").get<double>();
    if (!doc.at("global_phase").is_null())
        trace.global_phase = detail::complex_from_json(doc.at("global_phase"));
    return trace;
}

inline std::string trace_to_string(const teleport_trace& trace, int indent = 2) {
    return trace_to_json(trace).dump(indent);
}

inline teleport_trace trace_from_string(const std::string& text) {
    return trace_from_json(nlohmann::json::parse(text));
}

}  // namespace mct
