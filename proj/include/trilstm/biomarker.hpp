#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trilstm {

enum class Category { RNFL, ONH, GCC, IOP };

std::string to_string(Category c);

struct BiomarkerDescriptor {
    std::string code;
    Category category;
    std::string unit;
    bool has_ie;            // I-ER and I-EG carry no intra-eye difference
    bool strictly_positive; // thickness measurements only
};

// The fixed 17-biomarker taxonomy: 16 OCT-derived measurements plus IOP.
// Parent classes for the relationship heads are the 17 biomarkers, the
// three OCT categories, and a single decision-root node (IOP's parent).
class BiomarkerSchema {
public:
    static const BiomarkerSchema& standard();

    std::size_t size() const { return descriptors_.size(); }
    const BiomarkerDescriptor& at(std::size_t i) const;
    const std::vector<BiomarkerDescriptor>& descriptors() const { return descriptors_; }
    std::optional<std::size_t> index_of(std::string_view code) const;

    static constexpr std::size_t kParentClasses = 21; // 17 biomarkers + 3 categories + root
    static constexpr std::size_t kRootClass = 20;

    // Ground-truth subordination: a biomarker's parent class is its category
    // node (RNFL/ONH/GCC), except IOP which answers directly to the root.
    std::size_t parent_class(std::size_t biomarker_index) const;
    std::string parent_class_name(std::size_t parent_class_index) const;
    std::optional<std::size_t> parent_class_of_name(std::string_view name) const;

    // FNV-1a over codes, categories and units; stored in checkpoints.
    std::uint64_t hash() const;

private:
    BiomarkerSchema();
    std::vector<BiomarkerDescriptor> descriptors_;
};

} // namespace trilstm
