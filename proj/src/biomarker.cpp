#include "trilstm/biomarker.hpp"

#include "trilstm/error.hpp"

namespace trilstm {

std::string to_string(Category c) {
    switch (c) {
    case Category::RNFL: return "RNFL";
    case Category::ONH: return "ONH";
    case Category::GCC: return "GCC";
    case Category::IOP: return "IOP";
    }
    return "?";
}

BiomarkerSchema::BiomarkerSchema() {
    descriptors_ = {
        {"A-R", Category::RNFL, "um", true, true},
        {"S-R", Category::RNFL, "um", true, true},
        {"I-R", Category::RNFL, "um", true, true},
        {"I-ER", Category::RNFL, "um", false, false},
        {"A-O", Category::ONH, "ratio", true, false},
        {"V-O", Category::ONH, "ratio", true, false},
        {"H-O", Category::ONH, "ratio", true, false},
        {"RA", Category::ONH, "mm2", true, false},
        {"DA", Category::ONH, "mm2", true, false},
        {"CVO", Category::ONH, "mm2", true, false},
        {"A-G", Category::GCC, "um", true, true},
        {"S-G", Category::GCC, "um", true, true},
        {"I-F", Category::GCC, "um", true, true},
        {"I-EG", Category::GCC, "um", false, false},
        {"FLV", Category::GCC, "dimensionless", true, false},
        {"GLV", Category::GCC, "dimensionless", true, false},
        {"IOP", Category::IOP, "mmHg", true, false},
    };
}

const BiomarkerSchema& BiomarkerSchema::standard() {
    static const BiomarkerSchema schema;
    return schema;
}

const BiomarkerDescriptor& BiomarkerSchema::at(std::size_t i) const {
    if (i >= descriptors_.size())
        throw BoundsError("biomarker index " + std::to_string(i) + " out of range");
    return descriptors_[i];
}

std::optional<std::size_t> BiomarkerSchema::index_of(std::string_view code) const {
    for (std::size_t i = 0; i < descriptors_.size(); ++i)
        if (descriptors_[i].code == code)
            return i;
    return std::nullopt;
}

std::size_t BiomarkerSchema::parent_class(std::size_t biomarker_index) const {
    switch (at(biomarker_index).category) {
    case Category::RNFL: return size() + 0;
    case Category::ONH: return size() + 1;
    case Category::GCC: return size() + 2;
    case Category::IOP: return kRootClass;
    }
    return kRootClass;
}

std::string BiomarkerSchema::parent_class_name(std::size_t cls) const {
    if (cls < size())
        return descriptors_[cls].code;
    switch (cls) {
    case 17: return "RNFL";
    case 18: return "ONH";
    case 19: return "GCC";
    case 20: return "ROOT";
    default:
        throw BoundsError("parent class " + std::to_string(cls) + " out of range");
    }
}

std::optional<std::size_t> BiomarkerSchema::parent_class_of_name(std::string_view name) const {
    if (auto idx = index_of(name))
        return idx;
    if (name == "RNFL") return std::size_t{17};
    if (name == "ONH") return std::size_t{18};
    if (name == "GCC") return std::size_t{19};
    if (name == "ROOT") return std::size_t{20};
    return std::nullopt;
}

std::uint64_t BiomarkerSchema::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= '|';
        h *= 0x100000001b3ULL;
    };
    for (const auto& d : descriptors_) {
        mix(d.code);
        mix(to_string(d.category));
        mix(d.unit);
        mix(d.has_ie ? "ie" : "no-ie");
    }
    return h;
}

} // namespace trilstm
