#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trilstm/biomarker.hpp"
#include "trilstm/rng.hpp"

namespace trilstm {

// Normative-range flag from source data (blue/purple/red coloring); carried
// through CSV round-trips but never consumed by the models.
enum class ValueFlag : std::uint8_t { None = 0, Normal, Borderline, OutsideNormal };

struct PatientRecord {
    std::string patient_id;
    std::vector<double> od; // right eye, one value per schema biomarker
    std::vector<double> os; // left eye
    std::vector<double> ie; // od - os; NaN where the schema defines no IE
    int label = 0;          // 1 = glaucoma, 0 = normal
    std::vector<ValueFlag> od_flag, os_flag;

    bool has_flags() const;
};

struct GeneratorConfig {
    std::size_t n_patients = 2000;
    double glaucoma_fraction = 0.5;
    double noise_scale = 1.0;
    std::uint64_t seed = 42;
    double separability = 1.0; // scales the class mean gap

    void validate() const;
};

struct NormStats {
    // per biomarker, per column (od / os / ie)
    std::vector<double> mean_od, std_od;
    std::vector<double> mean_os, std_os;
    std::vector<double> mean_ie, std_ie;
    std::vector<std::uint8_t> ie_defined;
};

struct Dataset {
    std::vector<PatientRecord> records;
    std::optional<NormStats> stats; // present only on normalized views

    const BiomarkerSchema& schema() const { return BiomarkerSchema::standard(); }
    std::size_t size() const { return records.size(); }
};

// Class-conditional Gaussian sampler anchored to published normal-eye
// values, with the glaucoma class shifted in the clinically coherent
// direction (thinner RNFL/GCC, larger cup ratios and cup volume, higher
// IOP). A pure function of the config; per-record substreams keep the
// output independent of evaluation order.
Dataset generate_synthetic(const GeneratorConfig& cfg);

// Per-biomarker class means used by the generator, exposed for tests.
struct GeneratorAnchor {
    double normal_mean;
    double glaucoma_shift;
    double sd;
    double floor; // clamp for physically nonnegative quantities; NaN = none
};
const std::vector<GeneratorAnchor>& generator_anchors();

void save_csv(const Dataset& d, const std::string& path);
std::string dataset_to_csv(const Dataset& d);
Dataset load_csv(const std::string& path);
Dataset dataset_from_csv_text(const std::string& text, const std::string& origin = "<memory>");

NormStats fit_normalizer(const Dataset& train);
Dataset apply_normalizer(const Dataset& d, const NormStats& stats);

// Seeded permutation split into floor(0.75 n) train and the remainder.
std::pair<Dataset, Dataset> split_75_25(const Dataset& d, std::uint64_t seed);

// One training view = a record plus a biomarker presentation order.
struct OrderView {
    std::size_t record_index;
    std::vector<std::size_t> perm;
};

// `copies` views per record; random presentation order when rng is given,
// schema order otherwise (the unshuffled benchmark condition).
std::vector<OrderView> shuffle_order_augment(const Dataset& train, std::size_t copies,
                                             RngStream* rng);

std::vector<std::size_t> identity_permutation(std::size_t n);

// Model-facing token: a biomarker identity plus its normalized values.
// biomarker < 0 marks the reserved null/padding token.
struct Token {
    int biomarker = -1;
    double od = 0.0, os = 0.0, ie = 0.0;

    bool is_null() const { return biomarker < 0; }
    static Token null_token() { return Token{}; }
};

// First ceil(n/2) permuted biomarkers to stream 1, the rest to stream 2.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
partition_halves(const BiomarkerSchema& schema, const std::vector<std::size_t>& permutation);

std::vector<Token> tokens_for(const PatientRecord& record,
                              const std::vector<std::size_t>& order);

std::pair<std::vector<Token>, std::vector<Token>>
token_streams(const PatientRecord& record, const std::vector<std::size_t>& permutation);

} // namespace trilstm
