// tests/test_bellcodec.cpp
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "mct/bellcodec.hpp"
#include "mct/statevec.hpp"

using namespace mct;

namespace {

const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

// |phi+> on wires (0,1) of a 2-qubit register
state_vector phi_plus_pair() { return bell_state(bell_outcome::phi_plus); }

}  // namespace

TEST_CASE("bell basis amplitudes", "[bellcodec]") {
    const state_vector pp = bell_state(bell_outcome::phi_plus);
    REQUIRE(std::abs(pp[0] - cx{inv_sqrt2, 0}) < 1e-15);
    REQUIRE(std::abs(pp[3] - cx{inv_sqrt2, 0}) < 1e-15);

    const state_vector pm = bell_state(bell_outcome::phi_minus);
    REQUIRE(std::abs(pm[0] - cx{inv_sqrt2, 0}) < 1e-15);
    REQUIRE(std::abs(pm[3] + cx{inv_sqrt2, 0}) < 1e-15);

    const state_vector sp = bell_state(bell_outcome::psi_plus);
    REQUIRE(std::abs(sp[1] - cx{inv_sqrt2, 0}) < 1e-15);
    REQUIRE(std::abs(sp[2] - cx{inv_sqrt2, 0}) < 1e-15);

    const state_vector sm = bell_state(bell_outcome::psi_minus);
    REQUIRE(std::abs(sm[1] - cx{inv_sqrt2, 0}) < 1e-15);
    REQUIRE(std::abs(sm[2] + cx{inv_sqrt2, 0}) < 1e-15);

    // pairwise orthonormal
    for (const auto a : all_bell_outcomes)
        for (const auto b : all_bell_outcomes) {
            const double ip = std::abs(inner_product(bell_state(a), bell_state(b)));
            REQUIRE(ip == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-12));
        }
}

TEST_CASE("bit values and parities", "[bellcodec]") {
    REQUIRE(bit_value(bell_outcome::phi_plus) == 0);
    REQUIRE(bit_value(bell_outcome::phi_minus) == 0);
    REQUIRE(bit_value(bell_outcome::psi_plus) == 1);
    REQUIRE(bit_value(bell_outcome::psi_minus) == 1);

    REQUIRE(parity(bell_outcome::phi_plus) == +1);
    REQUIRE(parity(bell_outcome::phi_minus) == -1);
    REQUIRE(parity(bell_outcome::psi_plus) == +1);
    REQUIRE(parity(bell_outcome::psi_minus) == -1);
}

TEST_CASE("outcome names round-trip", "[bellcodec]") {
    for (const auto o : all_bell_outcomes) {
        const auto back = outcome_from_name(outcome_name(o));
        REQUIRE(back.has_value());
        REQUIRE(*back == o);
    }
    REQUIRE_FALSE(outcome_from_name("sigma+").has_value());
}

TEST_CASE("classify_bell recognizes the basis and rejects the rest", "[bellcodec]") {
    for (const auto o : all_bell_outcomes) {
        const auto got = classify_bell(bell_state(o));
        REQUIRE(got.has_value());
        REQUIRE(*got == o);
    }
    REQUIRE_FALSE(classify_bell(make_basis_state(2, "00")).has_value());

    // a global phase does not change the classification
    state_vector rotated = bell_state(bell_outcome::psi_minus);
    std::vector<cx> amp(rotated.amplitudes());
    for (auto& z : amp) z *= cx{0, 1};
    REQUIRE(classify_bell(state_vector(2, std::move(amp))) == bell_outcome::psi_minus);
}

TEST_CASE("ledger totals XOR bits and multiply signs", "[bellcodec]") {
    const std::vector<bell_outcome> run{bell_outcome::psi_minus, bell_outcome::phi_minus,
                                        bell_outcome::psi_minus};
    const ledger_sums sums = ledger_totals(run);
    REQUIRE(sums.v_total == 0);   // 1 ^ 0 ^ 1
    REQUIRE(sums.p_total == -1);  // (-)(-)(-)

    REQUIRE_THROWS_AS(ledger_totals({}), std::invalid_argument);
}

TEST_CASE("enumerated bell measurement covers exactly the non-vanishing branches",
          "[bellcodec]") {
    // measuring the pair of |phi+> x |0>: wires (0,1) are the pair
    const state_vector s = tensor(phi_plus_pair(), make_basis_state(1, "0"));
    const auto branches = bell_measure(s, 0, 1, measure_mode::enumerate());
    REQUIRE(branches.size() == 1);
    REQUIRE(branches[0].outcome == bell_outcome::phi_plus);
    REQUIRE(branches[0].probability == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(branches[0].collapsed.num_qubits() == 1);

    // a product state |00> splits evenly between phi+ and phi-
    const auto split = bell_measure(make_basis_state(2, "00"), 0, 1, measure_mode::enumerate());
    REQUIRE(split.size() == 2);
    double total = 0.0;
    for (const auto& br : split) {
        REQUIRE(bit_value(br.outcome) == 0);
        REQUIRE(br.probability == Catch::Approx(0.5).margin(1e-12));
        total += br.probability;
    }
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("forced measurement selects one branch or refuses", "[bellcodec]") {
    const state_vector s = tensor(phi_plus_pair(), make_basis_state(1, "1"));

    const auto forced = bell_measure(s, 0, 1, measure_mode::forced(bell_outcome::phi_plus));
    REQUIRE(forced.size() == 1);
    REQUIRE(forced[0].outcome == bell_outcome::phi_plus);

    REQUIRE_THROWS_AS(bell_measure(s, 0, 1, measure_mode::forced(bell_outcome::psi_plus)),
                      impossible_branch);
}

TEST_CASE("sampled measurement is seed-deterministic and distributed correctly",
          "[bellcodec]") {
    const state_vector s = make_basis_state(2, "01");  // psi+ / psi- mixture

    std::mt19937_64 rng_a(99), rng_b(99);
    const auto a = bell_measure(s, 0, 1, measure_mode::sample(), &rng_a);
    const auto b = bell_measure(s, 0, 1, measure_mode::sample(), &rng_b);
    REQUIRE(a.size() == 1);
    REQUIRE(a[0].outcome == b[0].outcome);

    REQUIRE_THROWS_AS(bell_measure(s, 0, 1, measure_mode::sample()), std::invalid_argument);

    // empirical frequencies over many draws approach one half each
    std::mt19937_64 rng(7);
    std::map<bell_outcome, int> hist;
    const int shots = 4000;
    for (int i = 0; i < shots; ++i)
        ++hist[bell_measure(s, 0, 1, measure_mode::sample(), &rng)[0].outcome];
    REQUIRE(hist.size() == 2);
    REQUIRE(hist.count(bell_outcome::psi_plus) == 1);
    REQUIRE(hist.count(bell_outcome::psi_minus) == 1);
    for (const auto& [o, count] : hist) {
        (void)o;
        REQUIRE(std::abs(count / double(shots) - 0.5) < 0.05);
    }
}

TEST_CASE("measurement branch probabilities track the state, not the basis order",
          "[bellcodec]") {
    // alpha|phi+> + beta|psi->: branch weights |alpha|^2, |beta|^2
    const double alpha = 0.6, beta = 0.8;
    std::vector<cx> amp(4, cx{0, 0});
    amp[0] = cx{alpha * inv_sqrt2, 0};
    amp[3] = cx{alpha * inv_sqrt2, 0};
    amp[1] = cx{beta * inv_sqrt2, 0};
    amp[2] = cx{-beta * inv_sqrt2, 0};
    const state_vector s(2, std::move(amp));

    const auto branches = bell_measure(s, 0, 1, measure_mode::enumerate());
    REQUIRE(branches.size() == 2);
    for (const auto& br : branches) {
        if (br.outcome == bell_outcome::phi_plus)
            REQUIRE(br.probability == Catch::Approx(alpha * alpha).margin(1e-12));
        else {
            REQUIRE(br.outcome == bell_outcome::psi_minus);
            REQUIRE(br.probability == Catch::Approx(beta * beta).margin(1e-12));
        }
    }
}
