#include "genrs/multicast.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace genrs {

std::vector<UserSet> supersets_within(UserSet base, UserSet universe) {
    if (!base.subset_of(universe)) throw std::invalid_argument("supersets_within: base not in universe");
    // Enumerate submasks of the free positions and attach them to base.
    const std::uint32_t free_bits = universe.minus(base).bits();
    std::vector<UserSet> out;
    std::uint32_t sub = 0;
    do {
        out.push_back(UserSet(base.bits() | sub));
        sub = (sub - free_bits) & free_bits;
    } while (sub != 0);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<UserSet> nonempty_subsets(UserSet s) {
    std::vector<UserSet> out;
    const std::uint32_t bits = s.bits();
    std::uint32_t sub = bits;
    while (sub != 0) {
        out.push_back(UserSet(sub));
        sub = (sub - 1) & bits;
    }
    std::sort(out.begin(), out.end());
    return out;
}

void RequestProfile::validate() const {
    if (num_users < 1 || num_users > UserSet::max_users)
        throw std::invalid_argument("RequestProfile: user count out of range");
    if (num_messages < 1) throw std::invalid_argument("RequestProfile: no messages");
    if (static_cast<int>(requests.size()) != num_users)
        throw std::invalid_argument("RequestProfile: request list size mismatch");
    std::set<int> covered;
    for (int k = 0; k < num_users; ++k) {
        if (requests[k].empty()) throw std::invalid_argument("RequestProfile: empty request set");
        for (int m : requests[k]) {
            if (m < 1) throw std::invalid_argument("RequestProfile: message id must be positive");
            covered.insert(m);
        }
    }
    if (static_cast<int>(covered.size()) != num_messages)
        throw std::invalid_argument(
            "RequestProfile: requested message count differs from the declared count");
}

UserSet RequestProfile::requesters_of(int message) const {
    UserSet s;
    for (int k = 1; k <= num_users; ++k) {
        const auto& r = requests[k - 1];
        if (std::find(r.begin(), r.end(), message) != r.end()) s = s.with(k);
    }
    return s;
}

MessageUnitPartition partition_messages(const RequestProfile& profile) {
    profile.validate();
    MessageUnitPartition part;
    part.num_users = profile.num_users;
    part.num_messages = profile.num_messages;
    std::set<int> ids;
    for (const auto& r : profile.requests) ids.insert(r.begin(), r.end());
    for (int m : ids) {
        UserSet s = profile.requesters_of(m);
        part.units[s].push_back(m);
    }
    for (auto& [s, msgs] : part.units) std::sort(msgs.begin(), msgs.end());
    return part;
}

std::vector<UserSet> MessageUnitPartition::groups() const {
    std::vector<UserSet> out;
    out.reserve(units.size());
    for (const auto& [s, msgs] : units) out.push_back(s);
    return out;
}

SplitStructure::SplitStructure(const MessageUnitPartition& partition, LayerPolicy policy)
    : num_users_(partition.num_users), policy_(policy) {
    if (partition.units.empty()) throw std::invalid_argument("SplitStructure: empty partition");
    const UserSet everyone = UserSet::all(num_users_);
    groups_ = partition.groups();

    // Layer set per group under the policy.  The full-group unit is never
    // split, which every policy reproduces since K's only superset is K.
    std::vector<std::vector<UserSet>> layer_sets(groups_.size());
    std::set<UserSet> layer_pool;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        switch (policy) {
            case LayerPolicy::FullGeneral:
                layer_sets[gi] = supersets_within(groups_[gi], everyone);
                break;
            case LayerPolicy::OneLayer:
                layer_sets[gi] = {groups_[gi]};
                if (groups_[gi] != everyone) layer_sets[gi].push_back(everyone);
                break;
            case LayerPolicy::NoSplit:
                layer_sets[gi] = {groups_[gi]};
                break;
        }
        for (UserSet g : layer_sets[gi]) layer_pool.insert(g);
    }
    layers_.assign(layer_pool.begin(), layer_pool.end());

    group_layers_.resize(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi)
        for (UserSet g : layer_sets[gi]) group_layers_[gi].push_back(layer_index(g));

    user_layers_.resize(num_users_);
    for (int k = 1; k <= num_users_; ++k)
        for (std::size_t li = 0; li < layers_.size(); ++li)
            if (layers_[li].contains(k)) user_layers_[k - 1].push_back(static_cast<int>(li));

    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        for (int li : group_layers_[gi]) {
            split_lookup_[{static_cast<int>(gi), li}] = static_cast<int>(split_indices_.size());
            split_indices_.push_back(SplitIndex{static_cast<int>(gi), li});
        }
    }

    // Origin sets hold the groups that actually route rate onto the layer,
    // i.e. those with a split index; under the full policy this equals
    // every group contained in the layer.
    layer_origins_.resize(layers_.size());
    for (const auto& idx : split_indices_) layer_origins_[idx.layer].push_back(idx.group);
    for (auto& v : layer_origins_) std::sort(v.begin(), v.end());
}

const std::vector<int>& SplitStructure::user_layers(int k) const {
    if (k < 1 || k > num_users_) throw std::out_of_range("SplitStructure: user index");
    return user_layers_[k - 1];
}

int SplitStructure::split_index(int group_idx, int layer_idx) const {
    auto it = split_lookup_.find({group_idx, layer_idx});
    if (it == split_lookup_.end()) throw std::invalid_argument("SplitStructure: invalid (group, layer) pair");
    return it->second;
}

int SplitStructure::group_index(UserSet s) const {
    auto it = std::lower_bound(groups_.begin(), groups_.end(), s);
    if (it == groups_.end() || *it != s) return -1;
    return static_cast<int>(it - groups_.begin());
}

int SplitStructure::layer_index(UserSet g) const {
    auto it = std::lower_bound(layers_.begin(), layers_.end(), g);
    if (it == layers_.end() || *it != g) return -1;
    return static_cast<int>(it - layers_.begin());
}

SplitStructure build_layers(const MessageUnitPartition& partition, LayerPolicy policy) {
    return SplitStructure(partition, policy);
}

std::vector<std::vector<int>> decode_subsets(const SplitStructure& structure, int k) {
    const std::vector<int>& mine = structure.user_layers(k);
    const int m = static_cast<int>(mine.size());
    std::vector<std::vector<int>> out;
    out.reserve((std::size_t{1} << m) - 1);
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> subset;
        for (int j = 0; j < m; ++j)
            if ((mask >> j) & 1u) subset.push_back(mine[j]);
        out.push_back(std::move(subset));
    }
    return out;
}

double message_rate(const RateAllocation& alloc, const SplitStructure& structure, UserSet group) {
    const int gi = structure.group_index(group);
    if (gi < 0) throw std::invalid_argument("message_rate: unknown group " + group.to_string());
    double sum = 0.0;
    for (int li : structure.layers_of_group(gi)) sum += alloc.values.at(structure.split_index(gi, li));
    return sum;
}

double transmission_rate(const RateAllocation& alloc, const SplitStructure& structure, UserSet layer) {
    const int li = structure.layer_index(layer);
    if (li < 0) throw std::invalid_argument("transmission_rate: unknown layer " + layer.to_string());
    double sum = 0.0;
    for (int gi : structure.origins_of_layer(li)) sum += alloc.values.at(structure.split_index(gi, li));
    return sum;
}

ServiceClass classify_service(const RequestProfile& profile) {
    profile.validate();
    const int K = profile.num_users;
    const int I = profile.num_messages;

    bool all_single = true;
    for (const auto& r : profile.requests) all_single &= (r.size() == 1);
    bool all_pairs = true;
    for (const auto& r : profile.requests) all_pairs &= (r.size() == 2);

    auto pairwise_distinct = [&]() {
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b)
                if (profile.requests[a] == profile.requests[b]) return false;
        return true;
    };
    auto common_count = [&]() {
        std::set<int> common(profile.requests[0].begin(), profile.requests[0].end());
        for (int k = 1; k < K; ++k) {
            std::set<int> next;
            for (int m : profile.requests[k])
                if (common.count(m)) next.insert(m);
            common = std::move(next);
        }
        return static_cast<int>(common.size());
    };

    if (I == K && all_single && pairwise_distinct()) return ServiceClass::Unicast;
    if (I == K + 1 && all_pairs && pairwise_distinct() && common_count() == 1)
        return ServiceClass::UnicastPlusCommon;
    if (I == 1) return ServiceClass::SingleGroupMulticast;
    if (I > 1 && I < K && all_single) return ServiceClass::MultiGroupMulticast;
    return ServiceClass::GeneralMulticast;
}

const char* to_string(ServiceClass c) {
    switch (c) {
        case ServiceClass::Unicast: return "unicast";
        case ServiceClass::UnicastPlusCommon: return "unicast+common";
        case ServiceClass::SingleGroupMulticast: return "single-group multicast";
        case ServiceClass::MultiGroupMulticast: return "multi-group multicast";
        case ServiceClass::GeneralMulticast: return "general multicast";
    }
    return "?";
}

const char* to_string(LayerPolicy p) {
    switch (p) {
        case LayerPolicy::FullGeneral: return "full-general";
        case LayerPolicy::OneLayer: return "one-layer";
        case LayerPolicy::NoSplit: return "no-split";
    }
    return "?";
}

}  // namespace genrs
