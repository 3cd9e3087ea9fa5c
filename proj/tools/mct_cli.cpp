// mct_cli.cpp
// Command-line front end: single sessions with a JSON trace, exhaustive
// branch verification, rule-table derivation diffs, secret-sharing and
// channel-setup demos, and the efficiency sweep.
//
// Exit codes: 0 success / all checks passed, 1 a verification or
// security check failed, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mct/qss.hpp"
#include "mct/trace_json.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_usage = 2;

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Argument helpers.

// "lo..hi" or a single integer.
std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const std::size_t v = std::stoul(text);
            return {v, v};
        }
        const std::size_t lo = std::stoul(text.substr(0, dots));
        const std::size_t hi = std::stoul(text.substr(dots + 2));
        if (hi < lo) throw usage_error("range '" + text + "' is backwards");
        return {lo, hi};
    } catch (const usage_error&) {
        throw;
    } catch (const std::exception&) {
        throw usage_error("cannot parse '" + text + "' as N or LO..HI");
    }
}

mct::cx parse_complex_pair(const std::string& text) {
    const auto comma = text.find(',');
    try {
        if (comma == std::string::npos) return {std::stod(text), 0.0};
        std::size_t used_re = 0, used_im = 0;
        const std::string re_text = text.substr(0, comma);
        const std::string im_text = text.substr(comma + 1);
        const double re = std::stod(re_text, &used_re);
        const double im = std::stod(im_text, &used_im);
        if (used_re != re_text.size() || used_im != im_text.size())
            throw usage_error("trailing characters in amplitude '" + text + "'");
        return {re, im};
    } catch (const usage_error&) {
        throw;
    } catch (const std::exception&) {
        throw usage_error("cannot parse amplitude '" + text + "' (expected re,im)");
    }
}

mct::channel_variant parse_variant(const std::string& name) {
    try {
        return mct::variant_from_name(name);
    } catch (const std::exception&) {
        throw usage_error("unknown variant '" + name + "' (xsecond, zlateh, direct)");
    }
}

mct::two_qubit_input random_input(std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
    std::normal_distribution<double> g(0.0, 1.0);
    std::array<mct::cx, 4> v;
    double norm = 0.0;
    for (auto& z : v) {
        z = {g(rng), g(rng)};
        norm += std::norm(z);
    }
    norm = std::sqrt(norm);
    for (auto& z : v) z /= norm;
    return {v[0], v[1], v[2], v[3]};
}

// Resolve --amps / --state / --random into a normalized input, warning on
// tiny drift and rejecting anything worse.
mct::two_qubit_input resolve_input(const std::vector<std::string>& amps,
                                   const std::vector<double>& state, bool random,
                                   std::uint64_t seed) {
    const int given = (amps.empty() ? 0 : 1) + (state.empty() ? 0 : 1) + (random ? 1 : 0);
    if (given > 1) throw usage_error("give at most one of --amps, --state, --random");
    mct::two_qubit_input input{};
    if (!amps.empty()) {
        if (amps.size() != 4) throw usage_error("--amps needs four re,im pairs");
        input = {parse_complex_pair(amps[0]), parse_complex_pair(amps[1]),
                 parse_complex_pair(amps[2]), parse_complex_pair(amps[3])};
    } else if (!state.empty()) {
        if (state.size() != 4) throw usage_error("--state needs four real values a b c d");
        input = {mct::cx{state[0], 0}, mct::cx{state[1], 0}, mct::cx{state[2], 0},
                 mct::cx{state[3], 0}};
    } else {
        return random_input(seed);
    }
    const double norm = input.norm();
    if (norm == 0.0) throw usage_error("input state has zero norm");
    if (std::abs(norm - 1.0) > 1e-6)
        throw usage_error("input state norm " + std::to_string(norm) +
                          " is too far from 1 to renormalize silently");
    if (std::abs(norm - 1.0) > 1e-12)
        std::cerr << "warning: renormalizing input (norm was " << norm << ")\n";
    input.a /= norm;
    input.b /= norm;
    input.c /= norm;
    input.d /= norm;
    return input;
}

std::vector<mct::measure_mode> resolve_modes(const std::string& force_list) {
    if (force_list.empty()) return {};
    std::vector<mct::measure_mode> modes;
    std::stringstream ss(force_list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto outcome = mct::outcome_from_name(token);
        if (!outcome) throw usage_error("unknown outcome '" + token + "' in --force");
        modes.push_back(mct::measure_mode::forced(*outcome));
    }
    return modes;
}

std::string fraction(std::size_t num, std::size_t den) {
    const std::size_t g = std::gcd(num, den);
    return std::to_string(num / g) + "/" + std::to_string(den / g);
}

// ---------------------------------------------------------------------------
// Subcommand bodies.

int cmd_run(std::size_t n, const std::string& variant_name, std::uint64_t seed,
            std::size_t receiver, const std::vector<std::string>& amps,
            const std::vector<double>& state, bool random, const std::string& force_list,
            bool as_json, const std::string& out_path) {
    const mct::channel_variant variant = parse_variant(variant_name);
    const mct::two_qubit_input input = resolve_input(amps, state, random, seed);
    std::mt19937_64 rng(seed);
    const mct::teleport_trace trace =
        mct::run_teleport(input, n, variant, resolve_modes(force_list), &rng, receiver);

    const std::string doc = mct::trace_to_string(trace);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw usage_error("cannot open '" + out_path + "' for writing");
        out << doc << "\n";
    }
    if (as_json) {
        std::cout << doc << "\n";
        return exit_ok;
    }

    std::cout << "n = " << n << ", variant = " << variant_name << ", receiver = "
              << trace.receiver << "\n";
    for (const auto& entry : trace.ledger)
        std::cout << "  " << entry.label << ": " << mct::outcome_name(entry.outcome)
                  << "  (v=" << mct::bit_value(entry.outcome)
                  << ", p=" << (mct::parity(entry.outcome) > 0 ? "+" : "-") << ")\n";
    std::cout << "totals: v = " << trace.v_total << ", p = "
              << (trace.p_total > 0 ? "+" : "-") << "\n";
    if (trace.corrected) {
        std::cout << "correction: " << mct::gate_name(trace.rule.u_on_a) << " (x) "
                  << mct::gate_name(trace.rule.u_on_b)
                  << (trace.rule.apply_cnot ? " + cnot" : "") << "\n";
    } else {
        std::cout << "correction: none (direct channel demo)\n";
    }
    std::printf("branch probability = %.10f\n", trace.probability);
    std::printf("fidelity = %.12f\n", trace.fidelity_value);
    if (trace.global_phase)
        std::printf("global phase = %.6f%+.6fi\n", trace.global_phase->real(),
                    trace.global_phase->imag());
    return exit_ok;
}

int cmd_verify(const std::string& n_range, const std::string& variant_name,
               std::uint64_t seed, const std::vector<std::string>& amps,
               const std::vector<double>& state, bool random) {
    const auto [n_lo, n_hi] = parse_range(n_range);
    const mct::two_qubit_input input =
        resolve_input(amps, state, random || (amps.empty() && state.empty()), seed);

    std::vector<mct::channel_variant> variants;
    if (variant_name == "both") {
        variants = {mct::channel_variant::x_second, mct::channel_variant::z_late_h};
    } else {
        variants = {parse_variant(variant_name)};
    }

    std::size_t total_branches = 0;
    bool all_ok = true;
    std::printf("%-8s %-8s %10s %14s %14s %14s  %s\n", "variant", "n", "branches", "max |dp|",
                "max |df|", "max |pred|", "result");
    for (mct::channel_variant variant : variants) {
        for (std::size_t n = n_lo; n <= n_hi; ++n) {
            const mct::branch_report rep = mct::verify_all_branches(input, n, variant);
            total_branches += rep.branches;
            all_ok = all_ok && rep.passed();
            std::printf("%-8s %-8zu %10zu %14.3e %14.3e %14.3e  %s\n",
                        mct::variant_name(variant).c_str(), n, rep.branches,
                        rep.max_probability_deviation, rep.max_fidelity_deviation,
                        rep.max_predictor_deviation, rep.passed() ? "pass" : "FAIL");
            for (const auto& note : rep.notes) std::printf("    %s\n", note.c_str());
        }
    }
    if (all_ok) {
        std::printf("all %zu branches restored the input exactly (up to global phase)\n",
                    total_branches);
        return exit_ok;
    }
    std::printf("branch verification FAILED\n");
    return exit_check_failed;
}

void print_rule_table(const mct::rule_table& table) {
    std::printf("  %-4s %-4s %-4s %-4s  %-22s %-12s\n", "v1", "vt", "p1", "pt",
                "receiver state", "correction");
    for (const auto& row : table) {
        std::string pattern;
        const char* names = "abcd";
        for (std::size_t i = 0; i < 4; ++i) {
            pattern += row.sign[i] < 0 ? '-' : (i ? '+' : ' ');
            pattern += names[row.perm[i]];
        }
        std::printf("  %-4d %-4d %-4s %-4s  %-22s %s (x) %s%s\n", row.v_xa1, row.v_total,
                    row.p_yb1 > 0 ? "+" : "-", row.p_total > 0 ? "+" : "-", pattern.c_str(),
                    mct::gate_name(row.rule.u_on_a).c_str(),
                    mct::gate_name(row.rule.u_on_b).c_str(),
                    row.rule.apply_cnot ? " + cnot" : "");
    }
}

int cmd_tables(const std::string& parity_name) {
    std::vector<mct::rule_parity> kinds;
    if (parity_name == "both") {
        kinds = {mct::rule_parity::odd, mct::rule_parity::even};
    } else if (parity_name == "odd") {
        kinds = {mct::rule_parity::odd};
    } else if (parity_name == "even") {
        kinds = {mct::rule_parity::even};
    } else {
        throw usage_error("--parity must be odd, even, or both");
    }

    bool all_ok = true;
    for (mct::rule_parity kind : kinds) {
        const char* label = (kind == mct::rule_parity::odd) ? "odd" : "even";
        std::printf("correction rules, %s controller count (derived from scratch):\n", label);
        const mct::rule_table derived = mct::derive_correction_table(kind);
        print_rule_table(derived);
        const mct::rule_table& shipped = mct::golden_table(kind);
        std::size_t matches = 0;
        for (std::size_t i = 0; i < derived.size(); ++i) {
            const bool same = derived[i].rule == shipped[i].rule &&
                              derived[i].perm == shipped[i].perm &&
                              derived[i].sign == shipped[i].sign;
            if (same) ++matches;
        }
        std::printf("%zu/%zu rows match the shipped table (%s)\n", matches, derived.size(),
                    label);
        all_ok = all_ok && matches == derived.size();

        const auto recovery = mct::derive_recovery_table(kind);
        std::size_t rec_matches = 0;
        std::printf("message recovery (totals -> gate): ");
        for (std::size_t cls = 0; cls < 4; ++cls) {
            const int vt = static_cast<int>(cls / 2);
            const int pt = (cls % 2 == 0) ? +1 : -1;
            std::printf("(%d,%s)->%s ", vt, pt > 0 ? "+" : "-",
                        mct::gate_name(recovery[cls]).c_str());
            if (recovery[cls] == mct::recovery_lookup(vt, pt)) ++rec_matches;
        }
        std::printf("\n%zu/4 recovery entries match the shipped table (%s)\n\n", rec_matches,
                    label);
        all_ok = all_ok && rec_matches == 4;
    }
    return all_ok ? exit_ok : exit_check_failed;
}

int cmd_qss(const std::string& message, std::size_t n, const std::string& variant_name,
            std::uint64_t seed, bool exhaustive, bool setup, std::size_t rounds,
            const std::string& eve_name, double attack_prob, double threshold) {
    if (setup) {
        mct::eavesdrop_model eve = mct::eavesdrop_model::none();
        if (eve_name == "intercept") {
            eve = mct::eavesdrop_model::intercept_resend(attack_prob);
        } else if (eve_name != "none") {
            throw usage_error("--eve must be none or intercept");
        }
        std::mt19937_64 rng(seed);
        const mct::channel_report report = mct::setup_channel(n, rounds, eve, threshold, rng);
        std::printf("rounds: %zu (ghz-z %zu, ghz-x %zu, decoy %zu)\n", report.rounds,
                    report.ghz_z_rounds, report.ghz_x_rounds, report.decoy_rounds);
        std::printf("errors: %zu, rate %.4f (analytic %.4f), threshold %.4f\n", report.errors,
                    report.error_rate, report.analytic_error_rate, report.threshold);
        std::printf("%s\n", report.aborted ? "channel REJECTED: eavesdropping suspected"
                                           : "channel accepted");
        return report.aborted ? exit_check_failed : exit_ok;
    }

    const mct::channel_variant variant = parse_variant(variant_name);
    if (message.size() != 2 || (message[0] != '0' && message[0] != '1') ||
        (message[1] != '0' && message[1] != '1'))
        throw usage_error("--message must be two bits, e.g. 10");
    const std::array<int, 2> bits = {message[0] - '0', message[1] - '0'};

    if (exhaustive) {
        std::size_t total = 0, good = 0;
        for (int b1 = 0; b1 <= 1; ++b1)
            for (int b2 = 0; b2 <= 1; ++b2) {
                const std::size_t codes = std::size_t{1} << (2 * (n + 2));
                for (std::size_t code = 0; code < codes; ++code) {
                    std::vector<mct::measure_mode> modes;
                    std::size_t rest = code;
                    for (std::size_t i = 0; i < n + 2; ++i) {
                        modes.push_back(
                            mct::measure_mode::forced(mct::all_bell_outcomes[rest & 3]));
                        rest >>= 2;
                    }
                    const auto trace = mct::qss_run({b1, b2}, n, variant, modes);
                    ++total;
                    if (trace.round_trip_ok() &&
                        std::abs(trace.readout_probability - 1.0) < 1e-9)
                        ++good;
                }
            }
        std::printf("%zu/%zu forced branches decoded their message deterministically\n", good,
                    total);
        return good == total ? exit_ok : exit_check_failed;
    }

    std::mt19937_64 rng(seed);
    const mct::qss_trace trace = mct::qss_run(bits, n, variant, {}, &rng);
    std::printf("message %d%d -> %s\n", bits[0], bits[1],
                mct::outcome_name(trace.encoded).c_str());
    for (const auto& entry : trace.ledger)
        std::printf("  %s: %s\n", entry.label.c_str(), mct::outcome_name(entry.outcome).c_str());
    std::printf("totals: v = %d, p = %s -> recovery %s%s\n", trace.v_total,
                trace.p_total > 0 ? "+" : "-", mct::gate_name(trace.recovery_gate).c_str(),
                trace.product_readout ? " (split over both wires, sigma_x (x) sigma_z readout)"
                                      : " (Bell readout)");
    if (trace.product_readout)
        std::printf("readout: s = %s, t = %d\n", trace.readout_s > 0 ? "+" : "-",
                    trace.readout_t);
    std::printf("recovered %s -> %d%d (%s)\n", mct::outcome_name(trace.recovered).c_str(),
                trace.decoded[0], trace.decoded[1],
                trace.round_trip_ok() ? "round trip ok" : "MISMATCH");
    return trace.round_trip_ok() ? exit_ok : exit_check_failed;
}

int cmd_efficiency(const std::string& n_range) {
    const auto [n_lo, n_hi] = parse_range(n_range);
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
        const mct::efficiency_summary s = mct::efficiency_report(n);
        std::printf(
            "n=%zu: eta_q = %.4f (= %s), eta_t = %.4f (= %s), transmitted %zu qubits, "
            "%zu classical bits\n",
            n, s.qubit_efficiency, fraction(s.useful_qubits, s.transmitted_qubits).c_str(),
            s.total_efficiency,
            fraction(s.useful_qubits, s.transmitted_qubits + s.classical_bits).c_str(),
            s.transmitted_qubits, s.classical_bits);
    }
    std::printf("(setup sample and decoy rounds are excluded from the denominators)\n");
    return exit_ok;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"multiparty-controlled teleportation simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run one session and print its trace");
    std::size_t run_n = 1;
    std::string run_variant = "xsecond";
    std::uint64_t run_seed = 1;
    std::size_t run_receiver = 0;
    std::vector<std::string> run_amps;
    std::vector<double> run_state;
    bool run_random = false;
    std::string run_force;
    bool run_json = false;
    std::string run_out;
    run->add_option("--n", run_n, "number of controllers");
    run->add_option("--variant", run_variant, "channel variant: xsecond, zlateh, direct");
    run->add_option("--seed", run_seed, "64-bit RNG seed");
    run->add_option("--receiver", run_receiver, "receiving agent (1..n+1, 0 = last)");
    run->add_option("--amps", run_amps, "input amplitudes as four re,im pairs")->expected(4);
    run->add_option("--state", run_state, "input amplitudes as four reals a b c d")->expected(4);
    run->add_flag("--random", run_random, "draw the input state from the seed");
    run->add_option("--force", run_force, "comma-separated forced outcomes (phi+,psi-,...)");
    run->add_flag("--json", run_json, "print the JSON trace instead of a summary");
    run->add_option("--out", run_out, "also write the JSON trace to this file");

    // verify
    auto* verify = app.add_subcommand("verify", "walk every branch and check restoration");
    std::string verify_n = "0..2";
    std::string verify_variant = "both";
    std::uint64_t verify_seed = 1;
    std::vector<std::string> verify_amps;
    std::vector<double> verify_state;
    bool verify_random = false;
    verify->add_option("--n", verify_n, "controller count or range LO..HI");
    verify->add_option("--variant", verify_variant, "xsecond, zlateh, or both");
    verify->add_option("--seed", verify_seed, "seed for the random input state");
    verify->add_option("--amps", verify_amps, "input amplitudes as four re,im pairs")
        ->expected(4);
    verify->add_option("--state", verify_state, "input amplitudes as four reals")->expected(4);
    verify->add_flag("--random", verify_random, "draw the input state from the seed (default)");

    // tables
    auto* tables = app.add_subcommand("tables", "re-derive the rule tables and diff them");
    std::string tables_parity = "both";
    tables->add_option("--parity", tables_parity, "odd, even, or both");

    // qss
    auto* qss = app.add_subcommand("qss", "share a classical message, or vet the channel");
    std::string qss_message = "00";
    std::size_t qss_n = 1;
    std::string qss_variant = "xsecond";
    std::uint64_t qss_seed = 1;
    bool qss_exhaustive = false;
    bool qss_setup = false;
    std::size_t qss_rounds = 10000;
    std::string qss_eve = "none";
    double qss_attack = 1.0;
    double qss_threshold = 0.125;
    qss->add_option("--message", qss_message, "two bits to share, e.g. 10");
    qss->add_option("--n", qss_n, "number of controllers");
    qss->add_option("--variant", qss_variant, "channel variant: xsecond or zlateh");
    qss->add_option("--seed", qss_seed, "64-bit RNG seed");
    qss->add_flag("--exhaustive", qss_exhaustive, "force every branch for every message");
    qss->add_flag("--setup", qss_setup, "run channel-setup sampling instead of a message");
    qss->add_option("--rounds", qss_rounds, "setup: number of sample rounds");
    qss->add_option("--eve", qss_eve, "setup: attacker model, none or intercept");
    qss->add_option("--attack-prob", qss_attack, "setup: fraction of rounds attacked");
    qss->add_option("--threshold", qss_threshold, "setup: abort above this error rate");

    // efficiency
    auto* efficiency = app.add_subcommand("efficiency", "resource summary per controller count");
    std::string efficiency_n = "0..6";
    efficiency->add_option("--n", efficiency_n, "controller count or range LO..HI");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (run->parsed())
            return cmd_run(run_n, run_variant, run_seed, run_receiver, run_amps, run_state,
                           run_random, run_force, run_json, run_out);
        if (verify->parsed())
            return cmd_verify(verify_n, verify_variant, verify_seed, verify_amps, verify_state,
                              verify_random);
        if (tables->parsed()) return cmd_tables(tables_parity);
        if (qss->parsed())
            return cmd_qss(qss_message, qss_n, qss_variant, qss_seed, qss_exhaustive, qss_setup,
                           qss_rounds, qss_eve, qss_attack, qss_threshold);
        if (efficiency->parsed()) return cmd_efficiency(efficiency_n);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_check_failed;
    }
    return exit_usage;
}

int main(int argc, char** argv) { return run_cli(argc, argv); }
