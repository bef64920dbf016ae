#include "trilstm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "trilstm/error.hpp"

namespace trilstm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

char flag_char(ValueFlag f) {
    switch (f) {
    case ValueFlag::Normal: return 'n';
    case ValueFlag::Borderline: return 'b';
    case ValueFlag::OutsideNormal: return 'o';
    default: return ' ';
    }
}

ValueFlag flag_from(const std::string& s, std::size_t line, std::size_t col) {
    if (s.empty()) return ValueFlag::None;
    if (s == "n") return ValueFlag::Normal;
    if (s == "b") return ValueFlag::Borderline;
    if (s == "o") return ValueFlag::OutsideNormal;
    throw ParseError("bad flag '" + s + "' at line " + std::to_string(line) +
                     ", column " + std::to_string(col));
}

} // namespace

bool PatientRecord::has_flags() const {
    auto any = [](const std::vector<ValueFlag>& v) {
        return std::any_of(v.begin(), v.end(), [](ValueFlag f) { return f != ValueFlag::None; });
    };
    return any(od_flag) || any(os_flag);
}

void GeneratorConfig::validate() const {
    if (n_patients < 4)
        throw ConfigError("generator needs n_patients >= 4");
    if (!(glaucoma_fraction > 0.0 && glaucoma_fraction < 1.0))
        throw ConfigError("glaucoma_fraction must lie in (0, 1)");
    if (noise_scale < 0.0)
        throw ConfigError("noise_scale must be >= 0");
    if (separability < 0.0)
        throw ConfigError("separability must be >= 0");
}

const std::vector<GeneratorAnchor>& generator_anchors() {
    // normal-class means follow the published normal-eye sample; the
    // glaucoma shifts and spreads are generator design choices pointing in
    // the clinically coherent direction (early-to-moderate disease, so no
    // single OCT biomarker separates the classes on its own).
    static const std::vector<GeneratorAnchor> anchors = {
        /* A-R  */ {97.0, -10.0, 9.0, 0.1},
        /* S-R  */ {94.0, -9.0, 9.0, 0.1},
        /* I-R  */ {99.0, -11.0, 9.0, 0.1},
        /* I-ER */ {-5.0, 5.0, 6.0, kNaN},
        /* A-O  */ {0.28, 0.14, 0.12, kNaN},
        /* V-O  */ {0.46, 0.12, 0.12, kNaN},
        /* H-O  */ {0.62, 0.10, 0.10, kNaN},
        /* RA   */ {1.44, -0.25, 0.30, 0.01},
        /* DA   */ {2.01, 0.0, 0.35, 0.01},
        /* CVO  */ {0.15, 0.12, 0.10, 0.001},
        /* A-G  */ {85.0, -8.0, 8.0, 0.1},
        /* S-G  */ {81.0, -7.0, 8.0, 0.1},
        /* I-F  */ {88.0, -9.0, 8.0, 0.1},
        /* I-EG */ {-7.0, 5.0, 6.0, kNaN},
        /* FLV  */ {0.87, 2.0, 1.5, 0.0},
        /* GLV  */ {10.76, 4.5, 4.0, 0.0},
        /* IOP  */ {15.0, 9.0, 3.0, 0.1},
    };
    return anchors;
}

namespace {

// Fraction of each value's variance carried by a per-record category
// factor shared across eyes and category members. This writes the
// subordination structure into the covariance (same-category biomarkers
// and fellow eyes co-vary) while leaving every marginal mean/sd anchored.
constexpr double kFactorShare = 0.5;

} // namespace

Dataset generate_synthetic(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto& schema = BiomarkerSchema::standard();
    const auto& anchors = generator_anchors();
    const double w = std::sqrt(kFactorShare);
    const double u = std::sqrt(1.0 - kFactorShare);

    Dataset out;
    out.records.reserve(cfg.n_patients);
    RngStream root(cfg.seed);
    RngStream record_root = root.child("record");

    for (std::size_t i = 0; i < cfg.n_patients; ++i) {
        RngStream rng = record_root.child(i);
        PatientRecord rec;
        {
            std::ostringstream id;
            id << "P" << std::setw(6) << std::setfill('0') << i;
            rec.patient_id = id.str();
        }
        rec.label = rng.uniform() < cfg.glaucoma_fraction ? 1 : 0;
        double factor[4];
        for (double& f : factor)
            f = rng.normal();
        rec.od.resize(schema.size());
        rec.os.resize(schema.size());
        rec.ie.resize(schema.size());
        for (std::size_t b = 0; b < schema.size(); ++b) {
            const GeneratorAnchor& a = anchors[b];
            const double mean =
                a.normal_mean + (rec.label == 1 ? cfg.separability * a.glaucoma_shift : 0.0);
            const double sd = a.sd * cfg.noise_scale;
            const double shared = factor[static_cast<int>(schema.at(b).category)];
            double od = mean + sd * (w * shared + u * rng.normal());
            double os = mean + sd * (w * shared + u * rng.normal());
            if (!std::isnan(a.floor)) {
                od = std::max(od, a.floor);
                os = std::max(os, a.floor);
            }
            rec.od[b] = od;
            rec.os[b] = os;
            rec.ie[b] = schema.at(b).has_ie ? od - os : kNaN;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::string dataset_to_csv(const Dataset& d) {
    const auto& schema = d.schema();
    const bool with_flags =
        std::any_of(d.records.begin(), d.records.end(),
                    [](const PatientRecord& r) { return r.has_flags(); });

    std::string out;
    out += "patient_id,label";
    for (const auto& desc : schema.descriptors()) {
        out += "," + desc.code + "_od," + desc.code + "_os," + desc.code + "_ie";
    }
    if (with_flags)
        for (const auto& desc : schema.descriptors())
            out += "," + desc.code + "_od_flag," + desc.code + "_os_flag";
    out += "\n";

    for (const auto& rec : d.records) {
        out += rec.patient_id;
        out += ",";
        out += std::to_string(rec.label);
        for (std::size_t b = 0; b < schema.size(); ++b) {
            out += "," + format_double(rec.od[b]);
            out += "," + format_double(rec.os[b]);
            out += ",";
            if (!std::isnan(rec.ie[b]))
                out += format_double(rec.ie[b]);
        }
        if (with_flags) {
            for (std::size_t b = 0; b < schema.size(); ++b) {
                const ValueFlag fo = b < rec.od_flag.size() ? rec.od_flag[b] : ValueFlag::None;
                const ValueFlag fs = b < rec.os_flag.size() ? rec.os_flag[b] : ValueFlag::None;
                out += ",";
                if (fo != ValueFlag::None) out += flag_char(fo);
                out += ",";
                if (fs != ValueFlag::None) out += flag_char(fs);
            }
        }
        out += "\n";
    }
    return out;
}

void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open '" + path + "' for writing");
    f << dataset_to_csv(d);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& s, std::size_t line, std::size_t col) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw ParseError("bad number '" + s + "' at line " + std::to_string(line) +
                         ", column " + std::to_string(col));
    return v;
}

} // namespace

Dataset dataset_from_csv_text(const std::string& text, const std::string& origin) {
    const auto& schema = BiomarkerSchema::standard();
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw ParseError(origin + ": empty file");

    const auto header = split_csv_line(line);
    std::vector<std::string> expected = {"patient_id", "label"};
    for (const auto& desc : schema.descriptors()) {
        expected.push_back(desc.code + "_od");
        expected.push_back(desc.code + "_os");
        expected.push_back(desc.code + "_ie");
    }
    const std::size_t base_cols = expected.size();
    if (header.size() < base_cols)
        throw ParseError(origin + ": header has " + std::to_string(header.size()) +
                         " columns, expected at least " + std::to_string(base_cols));
    for (std::size_t i = 0; i < base_cols; ++i)
        if (header[i] != expected[i])
            throw ParseError(origin + ": header column " + std::to_string(i + 1) + " is '" +
                             header[i] + "', expected '" + expected[i] + "'");

    bool with_flags = false;
    if (header.size() > base_cols) {
        std::vector<std::string> flag_cols;
        for (const auto& desc : schema.descriptors()) {
            flag_cols.push_back(desc.code + "_od_flag");
            flag_cols.push_back(desc.code + "_os_flag");
        }
        if (header.size() != base_cols + flag_cols.size())
            throw ParseError(origin + ": unexpected trailing columns in header");
        for (std::size_t i = 0; i < flag_cols.size(); ++i)
            if (header[base_cols + i] != flag_cols[i])
                throw ParseError(origin + ": header column " + std::to_string(base_cols + i + 1) +
                                 " is '" + header[base_cols + i] + "', expected '" +
                                 flag_cols[i] + "'");
        with_flags = true;
    }

    Dataset out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError(origin + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        PatientRecord rec;
        rec.patient_id = fields[0];
        if (fields[1] == "0")
            rec.label = 0;
        else if (fields[1] == "1")
            rec.label = 1;
        else
            throw ParseError(origin + ": bad label '" + fields[1] + "' at line " +
                             std::to_string(line_no) + ", column 2");
        rec.od.resize(schema.size());
        rec.os.resize(schema.size());
        rec.ie.resize(schema.size());
        for (std::size_t b = 0; b < schema.size(); ++b) {
            const std::size_t col = 2 + 3 * b;
            rec.od[b] = parse_double_field(fields[col], line_no, col + 1);
            rec.os[b] = parse_double_field(fields[col + 1], line_no, col + 2);
            const std::string& ie_field = fields[col + 2];
            const bool has_ie = schema.at(b).has_ie;
            if (ie_field.empty()) {
                if (has_ie)
                    throw ParseError(origin + ": missing IE value at line " +
                                     std::to_string(line_no) + ", column " +
                                     std::to_string(col + 3));
                rec.ie[b] = kNaN;
            } else {
                if (!has_ie)
                    throw ParseError(origin + ": unexpected IE value for " + schema.at(b).code +
                                     " at line " + std::to_string(line_no) + ", column " +
                                     std::to_string(col + 3));
                rec.ie[b] = parse_double_field(ie_field, line_no, col + 3);
                if (std::abs(rec.ie[b] - (rec.od[b] - rec.os[b])) > 1e-6)
                    throw ValidationError(origin + ": IE != OD - OS for " + schema.at(b).code +
                                          " at line " + std::to_string(line_no));
            }
        }
        if (with_flags) {
            rec.od_flag.resize(schema.size(), ValueFlag::None);
            rec.os_flag.resize(schema.size(), ValueFlag::None);
            for (std::size_t b = 0; b < schema.size(); ++b) {
                const std::size_t col = base_cols + 2 * b;
                rec.od_flag[b] = flag_from(fields[col], line_no, col + 1);
                rec.os_flag[b] = flag_from(fields[col + 1], line_no, col + 2);
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

Dataset load_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << f.rdbuf();
    return dataset_from_csv_text(buf.str(), path);
}

namespace {

struct ColumnStats {
    double mean = 0.0;
    double sd = 1.0;
};

ColumnStats column_stats(const Dataset& d, std::size_t b, const std::vector<double> PatientRecord::*col,
                         const std::string& label) {
    double sum = 0.0;
    for (const auto& r : d.records)
        sum += (r.*col)[b];
    const double mean = sum / static_cast<double>(d.size());
    double ss = 0.0;
    for (const auto& r : d.records) {
        const double dv = (r.*col)[b] - mean;
        ss += dv * dv;
    }
    double sd = std::sqrt(ss / static_cast<double>(d.size()));
    if (sd < 1e-8) {
        std::cerr << "warning: constant column " << label << ", std floored to 1e-8\n";
        sd = 1e-8;
    }
    return {mean, sd};
}

} // namespace

NormStats fit_normalizer(const Dataset& train) {
    if (train.records.empty())
        throw ConfigError("fit_normalizer needs a nonempty dataset");
    const auto& schema = train.schema();
    NormStats s;
    const std::size_t n = schema.size();
    s.mean_od.resize(n);
    s.std_od.resize(n);
    s.mean_os.resize(n);
    s.std_os.resize(n);
    s.mean_ie.assign(n, 0.0);
    s.std_ie.assign(n, 1.0);
    s.ie_defined.assign(n, 0);
    for (std::size_t b = 0; b < n; ++b) {
        const auto od = column_stats(train, b, &PatientRecord::od, schema.at(b).code + "_od");
        const auto os = column_stats(train, b, &PatientRecord::os, schema.at(b).code + "_os");
        s.mean_od[b] = od.mean;
        s.std_od[b] = od.sd;
        s.mean_os[b] = os.mean;
        s.std_os[b] = os.sd;
        if (schema.at(b).has_ie) {
            const auto ie = column_stats(train, b, &PatientRecord::ie, schema.at(b).code + "_ie");
            s.mean_ie[b] = ie.mean;
            s.std_ie[b] = ie.sd;
            s.ie_defined[b] = 1;
        }
    }
    return s;
}

Dataset apply_normalizer(const Dataset& d, const NormStats& stats) {
    const std::size_t n = d.schema().size();
    if (stats.mean_od.size() != n)
        throw ShapeError("normalizer stats do not match schema size");
    Dataset out = d;
    for (auto& rec : out.records) {
        for (std::size_t b = 0; b < n; ++b) {
            rec.od[b] = (rec.od[b] - stats.mean_od[b]) / stats.std_od[b];
            rec.os[b] = (rec.os[b] - stats.mean_os[b]) / stats.std_os[b];
            if (stats.ie_defined[b] && !std::isnan(rec.ie[b]))
                rec.ie[b] = (rec.ie[b] - stats.mean_ie[b]) / stats.std_ie[b];
        }
    }
    out.stats = stats;
    return out;
}

std::pair<Dataset, Dataset> split_75_25(const Dataset& d, std::uint64_t seed) {
    if (d.size() < 4)
        throw ConfigError("split_75_25 needs at least 4 records, got " +
                          std::to_string(d.size()));
    RngStream rng = RngStream(seed).child("split");
    const auto perm = rng.permutation(d.size());
    const std::size_t n_train = (d.size() * 3) / 4;

    Dataset train, test;
    train.records.reserve(n_train);
    test.records.reserve(d.size() - n_train);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (i < n_train)
            train.records.push_back(d.records[perm[i]]);
        else
            test.records.push_back(d.records[perm[i]]);
    }
    return {std::move(train), std::move(test)};
}

std::vector<std::size_t> identity_permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = i;
    return p;
}

std::vector<OrderView> shuffle_order_augment(const Dataset& train, std::size_t copies,
                                             RngStream* rng) {
    if (copies < 1)
        throw ConfigError("shuffle_order_augment needs copies >= 1");
    const std::size_t n_bio = train.schema().size();
    std::vector<OrderView> views;
    views.reserve(train.size() * copies);
    for (std::size_t i = 0; i < train.size(); ++i) {
        for (std::size_t c = 0; c < copies; ++c) {
            OrderView v;
            v.record_index = i;
            v.perm = rng ? rng->permutation(n_bio) : identity_permutation(n_bio);
            views.push_back(std::move(v));
        }
    }
    return views;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
partition_halves(const BiomarkerSchema& schema, const std::vector<std::size_t>& permutation) {
    const std::size_t n = schema.size();
    if (permutation.size() != n)
        throw ConfigError("partition_halves: permutation size " +
                          std::to_string(permutation.size()) + " != " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (std::size_t idx : permutation) {
        if (idx >= n || seen[idx])
            throw ConfigError("partition_halves: not a valid permutation");
        seen[idx] = true;
    }
    const std::size_t first = (n + 1) / 2; // odd split puts the extra biomarker in stream 1
    std::vector<std::size_t> s1(permutation.begin(), permutation.begin() + first);
    std::vector<std::size_t> s2(permutation.begin() + first, permutation.end());
    return {std::move(s1), std::move(s2)};
}

std::vector<Token> tokens_for(const PatientRecord& record,
                              const std::vector<std::size_t>& order) {
    std::vector<Token> tokens;
    tokens.reserve(order.size());
    for (std::size_t idx : order) {
        Token t;
        t.biomarker = static_cast<int>(idx);
        t.od = record.od[idx];
        t.os = record.os[idx];
        t.ie = std::isnan(record.ie[idx]) ? 0.0 : record.ie[idx];
        tokens.push_back(t);
    }
    return tokens;
}

std::pair<std::vector<Token>, std::vector<Token>>
token_streams(const PatientRecord& record, const std::vector<std::size_t>& permutation) {
    auto [idx1, idx2] = partition_halves(BiomarkerSchema::standard(), permutation);
    return {tokens_for(record, idx1), tokens_for(record, idx2)};
}

} // namespace trilstm
