#pragma once

#include <map>
#include <vector>

#include "genrs/user_set.hpp"

namespace genrs {

/// Who asked for what: K users, I messages, and the per-user request
/// sets I_k.  Message ids are opaque positive labels (they need not be
/// contiguous); num_messages is the size of their union, so every
/// message is requested by at least one user and every user requests
/// something.
struct RequestProfile {
    int num_users = 0;
    int num_messages = 0;
    std::vector<std::vector<int>> requests;  // requests[k-1] = sorted message ids

    /// Throws std::invalid_argument if the profile is malformed.
    void validate() const;

    /// Requester set of message m: {k | m ∈ I_k}.
    UserSet requesters_of(int message) const;
};

/// Partition of the message set into units keyed by the exact group of
/// users requesting them.  Only nonempty units are stored; keys in
/// ascending bitmask order.
struct MessageUnitPartition {
    int num_users = 0;
    int num_messages = 0;
    std::map<UserSet, std::vector<int>> units;

    std::vector<UserSet> groups() const;
};

/// Derives the message-unit partition from the requests.
MessageUnitPartition partition_messages(const RequestProfile& profile);

enum class LayerPolicy {
    FullGeneral,  // every superset of each group is a layer
    OneLayer,     // each group plus the all-users layer
    NoSplit,      // groups only
};

/// One (group, layer) rate index: the share of unit S carried on layer G.
struct SplitIndex {
    int group = -1;  // index into SplitStructure::groups()
    int layer = -1;  // index into SplitStructure::layers()
};

/// The layer structure induced by a partition and a split policy:
/// groups S, per-group layer sets G_S, the layer set G, per-layer origin
/// sets S_G, per-user decode sets G^(k), and the flat list of valid
/// (S, G) rate indices.
class SplitStructure {
public:
    SplitStructure(const MessageUnitPartition& partition, LayerPolicy policy);

    int num_users() const { return num_users_; }
    LayerPolicy policy() const { return policy_; }

    const std::vector<UserSet>& groups() const { return groups_; }
    const std::vector<UserSet>& layers() const { return layers_; }

    /// G_S as layer indices, ascending.
    const std::vector<int>& layers_of_group(int group_idx) const { return group_layers_[group_idx]; }
    /// Groups routing rate onto the layer (those with a split index), as
    /// group indices, ascending.  Under FullGeneral this is exactly
    /// S_G = {S ∈ groups | S ⊆ G}.
    const std::vector<int>& origins_of_layer(int layer_idx) const { return layer_origins_[layer_idx]; }
    /// G^(k) = layers containing user k, ascending. k is 1-based.
    const std::vector<int>& user_layers(int k) const;

    const std::vector<SplitIndex>& split_indices() const { return split_indices_; }
    int num_split_indices() const { return static_cast<int>(split_indices_.size()); }
    /// Flat index of the (group, layer) pair; throws if the pair is invalid.
    int split_index(int group_idx, int layer_idx) const;

    int group_index(UserSet s) const;  // -1 if absent
    int layer_index(UserSet g) const;  // -1 if absent

private:
    int num_users_ = 0;
    LayerPolicy policy_;
    std::vector<UserSet> groups_;
    std::vector<UserSet> layers_;
    std::vector<std::vector<int>> group_layers_;
    std::vector<std::vector<int>> layer_origins_;
    std::vector<std::vector<int>> user_layers_;
    std::vector<SplitIndex> split_indices_;
    std::map<std::pair<int, int>, int> split_lookup_;
};

SplitStructure build_layers(const MessageUnitPartition& partition, LayerPolicy policy);

/// Nonempty decode subsets X ⊆ G^(k) for user k, canonical order.
/// Each subset is a sorted list of layer indices.  The enumeration
/// follows ascending submask value over G^(k) listed ascending, so the
/// result has 2^|G^(k)| - 1 entries and is reproducible across runs.
std::vector<std::vector<int>> decode_subsets(const SplitStructure& structure, int k);

/// Nonnegative split rates R_{S,G} in bits/s, one per split index.
struct RateAllocation {
    std::vector<double> values;

    static RateAllocation zeros(const SplitStructure& s) {
        return RateAllocation{std::vector<double>(s.num_split_indices(), 0.0)};
    }
};

/// R_S = Σ_{G ∈ G_S} R_{S,G}.
double message_rate(const RateAllocation& alloc, const SplitStructure& structure, UserSet group);

/// R̃_G = Σ_{S ∈ S_G} R_{S,G}.
double transmission_rate(const RateAllocation& alloc, const SplitStructure& structure, UserSet layer);

enum class ServiceClass {
    Unicast,
    UnicastPlusCommon,
    SingleGroupMulticast,
    MultiGroupMulticast,
    GeneralMulticast,
};

/// Matches the profile against the special-case request patterns, in
/// order; GeneralMulticast when none applies.
ServiceClass classify_service(const RequestProfile& profile);

const char* to_string(ServiceClass c);
const char* to_string(LayerPolicy p);

}  // namespace genrs
