#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace genrs {

/// Subset of the user index set {1, ..., K}, stored as a bitmask.
///
/// User k occupies bit k-1.  At most 16 users are supported: the layer
/// structures enumerated on top of these sets grow doubly exponentially
/// in K, so larger universes are rejected outright rather than allowed
/// to exhaust memory.  Canonical enumeration order everywhere in this
/// library is ascending bitmask value.
class UserSet {
public:
    static constexpr int max_users = 16;

    constexpr UserSet() = default;
    constexpr explicit UserSet(std::uint32_t bits) : bits_(bits) {}

    /// Builds a set from 1-based user indices.
    static UserSet of(std::initializer_list<int> users) {
        UserSet s;
        for (int k : users) s = s.with(k);
        return s;
    }

    /// Full set {1, ..., K}.
    static UserSet all(int K) {
        if (K < 0 || K > max_users) throw std::invalid_argument("UserSet: K out of range");
        return UserSet(K == 0 ? 0u : (K == 32 ? ~0u : ((1u << K) - 1u)));
    }

    constexpr std::uint32_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }
    int size() const { return std::popcount(bits_); }

    bool contains(int k) const {
        check_user(k);
        return (bits_ >> (k - 1)) & 1u;
    }
    UserSet with(int k) const {
        check_user(k);
        return UserSet(bits_ | (1u << (k - 1)));
    }
    UserSet without(int k) const {
        check_user(k);
        return UserSet(bits_ & ~(1u << (k - 1)));
    }

    UserSet united(UserSet o) const { return UserSet(bits_ | o.bits_); }
    UserSet intersected(UserSet o) const { return UserSet(bits_ & o.bits_); }
    UserSet minus(UserSet o) const { return UserSet(bits_ & ~o.bits_); }
    bool subset_of(UserSet o) const { return (bits_ & ~o.bits_) == 0; }

    /// 1-based member indices in ascending order.
    std::vector<int> members() const {
        std::vector<int> out;
        out.reserve(size());
        for (std::uint32_t b = bits_; b != 0; b &= b - 1)
            out.push_back(std::countr_zero(b) + 1);
        return out;
    }

    std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (int k : members()) {
            if (!first) s += ",";
            s += std::to_string(k);
            first = false;
        }
        return s + "}";
    }

    friend constexpr bool operator==(UserSet a, UserSet b) { return a.bits_ == b.bits_; }
    friend constexpr bool operator!=(UserSet a, UserSet b) { return a.bits_ != b.bits_; }
    friend constexpr bool operator<(UserSet a, UserSet b) { return a.bits_ < b.bits_; }

private:
    static void check_user(int k) {
        if (k < 1 || k > max_users) throw std::invalid_argument("UserSet: user index out of range");
    }
    std::uint32_t bits_ = 0;
};

/// All sets X with `base` ⊆ X ⊆ `universe`, ascending bitmask order.
std::vector<UserSet> supersets_within(UserSet base, UserSet universe);

/// All nonempty subsets of `s`, ascending bitmask order.
std::vector<UserSet> nonempty_subsets(UserSet s);

}  // namespace genrs
