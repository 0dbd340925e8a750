#include "genrs/program.hpp"

namespace genrs {

Block VariableSpace::add_block(const std::string& name, int size, double scale) {
    if (size < 1) throw std::invalid_argument("VariableSpace: block size must be positive");
    if (scale <= 0.0 || !std::isfinite(scale))
        throw std::invalid_argument("VariableSpace: block scale must be positive");
    for (const auto& e : entries_)
        if (e.name == name) throw std::invalid_argument("VariableSpace: duplicate block " + name);
    Block b{dim_, size};
    entries_.push_back({name, b});
    scales_.insert(scales_.end(), size, scale);
    dim_ += size;
    return b;
}

const Block& VariableSpace::block(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.block;
    throw std::invalid_argument("VariableSpace: unknown block " + name);
}

bool VariableSpace::has_block(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

void VariableSpace::set_scale(int index, double scale) {
    if (scale <= 0.0 || !std::isfinite(scale))
        throw std::invalid_argument("VariableSpace: scale must be positive");
    scales_.at(index) = scale;
}

}  // namespace genrs
