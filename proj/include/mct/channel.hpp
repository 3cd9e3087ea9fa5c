// channel.hpp
// GHZ resource preparation and assembly of the full composite register
// (x, y, a_1..a_{n+2}, b_1..b_{n+2}) in the three channel variants.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "statevec.hpp"

namespace mct {

enum class ghz_basis { z, x };

// XSecond:  second GHZ prepared in the x basis (the standard channel).
// ZLateH:   both GHZ in the z basis; the rotation of the second channel
//           is supplied at measurement time instead of preparation time —
//           each measuring party applies H to its own b wire immediately
//           before its Bell measurement (the last controller's H is the
//           final, "late" one) and the receiver applies H to b_{n+2} on
//           receipt.  Physically identical to XSecond because each H
//           commutes with every measurement that does not touch its wire.
// Direct:   both GHZ in the z basis with no rotation anywhere; only
//           EPR-class states survive this channel, so it serves as the
//           limitation demo rather than a working protocol.
enum class channel_variant { x_second, z_late_h, direct };

inline std::string variant_name(channel_variant v) {
    switch (v) {
        case channel_variant::x_second: return "xsecond";
        case channel_variant::z_late_h: return "zlateh";
        case channel_variant::direct: return "direct";
    }
    return "?";
}

inline channel_variant variant_from_name(const std::string& name) {
    if (name == "xsecond") return channel_variant::x_second;
    if (name == "zlateh") return channel_variant::z_late_h;
    if (name == "direct") return channel_variant::direct;
    throw std::invalid_argument("unknown channel variant: " + name);
}

// (|0...0> + |1...1>)/sqrt(2) over k wires, or its Hadamard-rotated
// x-basis form (|+...+> + |-...->)/sqrt(2).
inline state_vector make_ghz(std::size_t k, ghz_basis basis) {
    if (k < 2) throw std::invalid_argument("make_ghz: need at least 2 qubits");
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<cx> amp(std::size_t{1} << k, cx{0, 0});
    amp.front() = cx{s, 0};
    amp.back() = cx{s, 0};
    state_vector ghz(k, std::move(amp));
    if (basis == ghz_basis::x)
        for (std::size_t w = 0; w < k; ++w) ghz = apply_single(ghz, single_gate::h, w);
    return ghz;
}

struct party_id {
    enum class kind_t { alice, charlie, bob } kind = kind_t::alice;
    std::size_t index = 0;  // 1..n for controllers

    static party_id alice() { return {kind_t::alice, 0}; }
    static party_id charlie(std::size_t i) { return {kind_t::charlie, i}; }
    static party_id bob() { return {kind_t::bob, 0}; }

    bool operator==(const party_id&) const = default;

    std::string name() const {
        switch (kind) {
            case kind_t::alice: return "alice";
            case kind_t::charlie: return "charlie" + std::to_string(index);
            case kind_t::bob: return "bob";
        }
        return "?";
    }
};

// Fixed register layout for n controllers: wires in tensor order are
// (x, y, a_1..a_{n+2}, b_1..b_{n+2}), 2n+6 wires in total.
class wire_map {
public:
    explicit wire_map(std::size_t n) : n_(n) {}

    std::size_t n() const { return n_; }
    std::size_t num_wires() const { return 2 * n_ + 6; }

    std::size_t x() const { return 0; }
    std::size_t y() const { return 1; }

    std::size_t a(std::size_t i) const {  // i in 1..n+2
        check_chain_index(i);
        return 1 + i;
    }

    std::size_t b(std::size_t i) const {
        check_chain_index(i);
        return n_ + 3 + i;
    }

    std::string wire_name(std::size_t w) const {
        if (w == 0) return "x";
        if (w == 1) return "y";
        if (w >= num_wires()) throw std::out_of_range("wire_map: wire out of range");
        if (w <= n_ + 3) return "a" + std::to_string(w - 1);
        return "b" + std::to_string(w - n_ - 3);
    }

    // Alice holds the input pair and the first particle of each chain;
    // controller i holds (a_{i+1}, b_{i+1}); the receiver holds the ends.
    party_id owner(std::size_t w) const {
        if (w >= num_wires()) throw std::out_of_range("wire_map: wire out of range");
        if (w <= 1) return party_id::alice();
        const std::size_t chain_pos = (w <= n_ + 3) ? w - 1 : w - n_ - 3;  // 1..n+2
        if (chain_pos == 1) return party_id::alice();
        if (chain_pos == n_ + 2) return party_id::bob();
        return party_id::charlie(chain_pos - 1);
    }

private:
    void check_chain_index(std::size_t i) const {
        if (i < 1 || i > n_ + 2) throw std::out_of_range("wire_map: chain index out of range");
    }

    std::size_t n_;
};

struct assembled_system {
    state_vector state;
    wire_map wires;
};

// |Phi>_xy (x) GHZ_a (x) GHZ_b with the second GHZ basis chosen by the
// variant: X for XSecond, Z for ZLateH and Direct.
inline assembled_system assemble_composite(const two_qubit_input& input, std::size_t n,
                                           channel_variant variant) {
    if (std::abs(input.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("assemble_composite: input state must be normalized");
    const ghz_basis second = (variant == channel_variant::x_second) ? ghz_basis::x : ghz_basis::z;
    state_vector st = tensor(tensor(input.to_state(), make_ghz(n + 2, ghz_basis::z)),
                             make_ghz(n + 2, second));
    return {std::move(st), wire_map(n)};
}

}  // namespace mct
