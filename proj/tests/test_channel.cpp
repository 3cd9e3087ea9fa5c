// tests/test_channel.cpp
#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>

#include "mct/channel.hpp"
#include "mct/statevec.hpp"

using namespace mct;

namespace {

const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

two_qubit_input generic_input() {
    two_qubit_input in{cx{0.31, -0.42}, cx{0.18, 0.27}, cx{-0.05, 0.52}, cx{0.41, 0.33}};
    const double r = in.norm();
    in.a /= r;
    in.b /= r;
    in.c /= r;
    in.d /= r;
    return in;
}

}  // namespace

TEST_CASE("ghz states in both preparation bases", "[channel]") {
    const state_vector z3 = make_ghz(3, ghz_basis::z);
    REQUIRE(z3.num_qubits() == 3);
    REQUIRE(std::abs(z3[0] - cx{inv_sqrt2, 0}) < 1e-15);
    REQUIRE(std::abs(z3[7] - cx{inv_sqrt2, 0}) < 1e-15);
    for (std::size_t i = 1; i < 7; ++i) REQUIRE(std::abs(z3[i]) < 1e-15);

    // x-basis form: H on every wire of the z form
    state_vector rotated = make_ghz(3, ghz_basis::z);
    for (std::size_t w = 0; w < 3; ++w) rotated = apply_single(rotated, single_gate::h, w);
    const state_vector x3 = make_ghz(3, ghz_basis::x);
    REQUIRE(equal_up_to_global_phase(rotated, x3));

    // x form carries only even-parity components
    for (std::size_t i = 0; i < x3.dim(); ++i) {
        const bool even = (std::popcount(i) % 2) == 0;
        if (even)
            REQUIRE(std::abs(x3[i]) > 1e-12);
        else
            REQUIRE(std::abs(x3[i]) < 1e-15);
    }

    REQUIRE_THROWS_AS(make_ghz(1, ghz_basis::z), std::invalid_argument);
}

TEST_CASE("variant names round-trip", "[channel]") {
    for (const auto v :
         {channel_variant::x_second, channel_variant::z_late_h, channel_variant::direct})
        REQUIRE(variant_from_name(variant_name(v)) == v);
    REQUIRE_THROWS_AS(variant_from_name("ghz"), std::invalid_argument);
}

TEST_CASE("wire layout for n controllers", "[channel]") {
    const wire_map wires(2);  // n = 2: wires (x, y, a1..a4, b1..b4)
    REQUIRE(wires.num_wires() == 10);
    REQUIRE(wires.x() == 0);
    REQUIRE(wires.y() == 1);
    REQUIRE(wires.a(1) == 2);
    REQUIRE(wires.a(4) == 5);
    REQUIRE(wires.b(1) == 6);
    REQUIRE(wires.b(4) == 9);

    REQUIRE(wires.wire_name(0) == "x");
    REQUIRE(wires.wire_name(3) == "a2");
    REQUIRE(wires.wire_name(6) == "b1");

    REQUIRE(wires.owner(0) == party_id::alice());
    REQUIRE(wires.owner(2) == party_id::alice());    // a1 stays home
    REQUIRE(wires.owner(3) == party_id::charlie(1)); // a2 -> first agent
    REQUIRE(wires.owner(3).name() == "charlie1");
    REQUIRE(wires.owner(5) == party_id::bob());      // chain ends
    REQUIRE(wires.owner(9) == party_id::bob());

    REQUIRE_THROWS_AS(wires.a(0), std::out_of_range);
    REQUIRE_THROWS_AS(wires.a(5), std::out_of_range);
}

TEST_CASE("assembled composite is normalized with the right register width", "[channel]") {
    const two_qubit_input in = generic_input();
    for (std::size_t n = 0; n <= 3; ++n) {
        const assembled_system sys = assemble_composite(in, n, channel_variant::x_second);
        REQUIRE(sys.state.num_qubits() == 2 * n + 6);
        REQUIRE(std::abs(sys.state.norm() - 1.0) < 1e-12);
        REQUIRE(sys.wires.num_wires() == sys.state.num_qubits());
    }
}

TEST_CASE("assembly rejects unnormalized inputs", "[channel]") {
    two_qubit_input bad = generic_input();
    bad.a *= 2.0;
    REQUIRE_THROWS_AS(assemble_composite(bad, 1, channel_variant::x_second),
                      std::invalid_argument);
}

TEST_CASE("preparation differs only where the second chain basis differs", "[channel]") {
    const two_qubit_input in = generic_input();

    // the late-rotation variant defers every H to measurement time, so its
    // prepared register equals the no-rotation variant's
    const auto late = assemble_composite(in, 1, channel_variant::z_late_h);
    const auto none = assemble_composite(in, 1, channel_variant::direct);
    REQUIRE(equal_up_to_global_phase(late.state, none.state));

    // the x-basis second chain is a genuinely different preparation
    const auto xs = assemble_composite(in, 1, channel_variant::x_second);
    REQUIRE(fidelity(xs.state, none.state) < 1.0 - 1e-6);

    // and it equals H applied to every b wire of the z-basis preparation
    state_vector rotated = none.state;
    for (std::size_t i = 1; i <= 3; ++i)
        rotated = apply_single(rotated, single_gate::h, none.wires.b(i));
    REQUIRE(equal_up_to_global_phase(rotated, xs.state));
}

TEST_CASE("input amplitudes land on the x and y wires", "[channel]") {
    // basis input |10>: x wire carries 1, y wire carries 0
    const two_qubit_input in{cx{0, 0}, cx{0, 0}, cx{1, 0}, cx{0, 0}};
    const auto sys = assemble_composite(in, 0, channel_variant::x_second);
    for (std::size_t i = 0; i < sys.state.dim(); ++i) {
        if (std::abs(sys.state[i]) < 1e-15) continue;
        REQUIRE(((i >> (sys.state.num_qubits() - 1)) & 1) == 1);  // x wire set
        REQUIRE(((i >> (sys.state.num_qubits() - 2)) & 1) == 0);  // y wire clear
    }
}
