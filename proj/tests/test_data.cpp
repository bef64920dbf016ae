#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "trilstm/dataset.hpp"
#include "trilstm/error.hpp"
#include "trilstm/metrics.hpp"

using namespace trilstm;

namespace {

// single-biomarker rank AUC, label vs raw value as the score
double biomarker_auc(const Dataset& d, std::size_t b) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : d.records) {
        scores.push_back(r.od[b]);
        labels.push_back(r.label);
    }
    return rank_auc(scores, labels);
}

} // namespace

TEST_SUITE("data") {

TEST_CASE("schema holds the sixteen published biomarkers plus IOP") {
    const auto& s = BiomarkerSchema::standard();
    REQUIRE(s.size() == 17);
    const char* codes[] = {"A-R", "S-R", "I-R", "I-ER", "A-O", "V-O", "H-O", "RA", "DA",
                           "CVO", "A-G", "S-G", "I-F", "I-EG", "FLV", "GLV", "IOP"};
    std::set<std::string> seen;
    for (std::size_t i = 0; i < 17; ++i) {
        CHECK(s.at(i).code == codes[i]);
        seen.insert(s.at(i).code);
    }
    CHECK(seen.size() == 17); // unique codes
    CHECK(s.at(*s.index_of("IOP")).category == Category::IOP);
    CHECK(s.at(*s.index_of("A-R")).category == Category::RNFL);
    CHECK(s.at(*s.index_of("CVO")).category == Category::ONH);
    CHECK(s.at(*s.index_of("GLV")).category == Category::GCC);
}

TEST_CASE("ground-truth parents follow the category structure") {
    const auto& s = BiomarkerSchema::standard();
    CHECK(s.parent_class_name(s.parent_class(*s.index_of("A-R"))) == "RNFL");
    CHECK(s.parent_class_name(s.parent_class(*s.index_of("DA"))) == "ONH");
    CHECK(s.parent_class_name(s.parent_class(*s.index_of("FLV"))) == "GCC");
    CHECK(s.parent_class_name(s.parent_class(*s.index_of("IOP"))) == "ROOT");
}

TEST_CASE("generator is a pure function of its config") {
    GeneratorConfig cfg;
    cfg.n_patients = 64;
    cfg.seed = 9;
    const std::string a = dataset_to_csv(generate_synthetic(cfg));
    const std::string b = dataset_to_csv(generate_synthetic(cfg));
    CHECK(a == b);
}

TEST_CASE("generator anchors the normal class to the published sample") {
    GeneratorConfig cfg;
    cfg.n_patients = 4000;
    cfg.seed = 3;
    const Dataset d = generate_synthetic(cfg);
    const std::size_t ar = *d.schema().index_of("A-R");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : d.records)
        if (r.label == 0) {
            sum += r.od[ar];
            ++n;
        }
    CHECK(sum / static_cast<double>(n) == doctest::Approx(97.0).epsilon(0.01));
}

TEST_CASE("separability 0 erases single-biomarker signal") {
    GeneratorConfig cfg;
    cfg.n_patients = 2000;
    cfg.seed = 11;
    cfg.separability = 0.0;
    const Dataset d = generate_synthetic(cfg);
    for (std::size_t b = 0; b < d.schema().size(); ++b) {
        const double auc = biomarker_auc(d, b);
        CHECK(auc > 0.45);
        CHECK(auc < 0.55);
    }
}

TEST_CASE("IOP alone separates the default classes") {
    GeneratorConfig cfg;
    cfg.n_patients = 2000;
    cfg.seed = 12;
    const Dataset d = generate_synthetic(cfg);
    CHECK(biomarker_auc(d, *d.schema().index_of("IOP")) >= 0.9);
}

TEST_CASE("thickness biomarkers stay strictly positive") {
    GeneratorConfig cfg;
    cfg.n_patients = 1000;
    cfg.seed = 4;
    cfg.noise_scale = 2.0;
    const Dataset d = generate_synthetic(cfg);
    for (const auto& r : d.records)
        for (std::size_t b = 0; b < d.schema().size(); ++b)
            if (d.schema().at(b).strictly_positive) {
                CHECK(r.od[b] > 0.0);
                CHECK(r.os[b] > 0.0);
            }
}

TEST_CASE("ie equals od minus os wherever defined") {
    GeneratorConfig cfg;
    cfg.n_patients = 200;
    cfg.seed = 5;
    const Dataset d = generate_synthetic(cfg);
    for (const auto& r : d.records)
        for (std::size_t b = 0; b < d.schema().size(); ++b) {
            if (d.schema().at(b).has_ie)
                CHECK(std::abs(r.ie[b] - (r.od[b] - r.os[b])) < 1e-6);
            else
                CHECK(std::isnan(r.ie[b]));
        }
}

TEST_CASE("published sample row parses with the ie check passing") {
    // the A-R row of the normal-eye sample: OD 97, OS 91, IE 6
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 1;
    Dataset d = generate_synthetic(cfg);
    auto& rec = d.records[0];
    const std::size_t ar = *d.schema().index_of("A-R");
    rec.od[ar] = 97.0;
    rec.os[ar] = 91.0;
    rec.ie[ar] = 6.0;
    const Dataset round = dataset_from_csv_text(dataset_to_csv(d));
    CHECK(round.records[0].od[ar] == 97.0);
    CHECK(round.records[0].os[ar] == 91.0);
    CHECK(round.records[0].ie[ar] == 6.0);
}

TEST_CASE("empty file is a parse error, not an empty dataset") {
    CHECK_THROWS_AS(dataset_from_csv_text(""), ParseError);
}

TEST_CASE("csv round-trip is exact") {
    GeneratorConfig cfg;
    cfg.n_patients = 100;
    cfg.seed = 21;
    const Dataset d = generate_synthetic(cfg);
    const std::string text = dataset_to_csv(d);
    const Dataset back = dataset_from_csv_text(text);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.records[i].patient_id == d.records[i].patient_id);
        CHECK(back.records[i].label == d.records[i].label);
        for (std::size_t b = 0; b < d.schema().size(); ++b) {
            CHECK(back.records[i].od[b] == d.records[i].od[b]);
            CHECK(back.records[i].os[b] == d.records[i].os[b]);
            if (d.schema().at(b).has_ie)
                CHECK(back.records[i].ie[b] == d.records[i].ie[b]);
        }
    }
    CHECK(dataset_to_csv(back) == text);
}

TEST_CASE("csv round-trip preserves normative flags") {
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 2;
    Dataset d = generate_synthetic(cfg);
    d.records[1].od_flag.assign(17, ValueFlag::None);
    d.records[1].os_flag.assign(17, ValueFlag::None);
    d.records[1].od_flag[0] = ValueFlag::Normal;
    d.records[1].os_flag[5] = ValueFlag::OutsideNormal;
    d.records[1].od_flag[11] = ValueFlag::Borderline;
    const Dataset back = dataset_from_csv_text(dataset_to_csv(d));
    CHECK(back.records[1].od_flag[0] == ValueFlag::Normal);
    CHECK(back.records[1].os_flag[5] == ValueFlag::OutsideNormal);
    CHECK(back.records[1].od_flag[11] == ValueFlag::Borderline);
    CHECK(dataset_to_csv(back) == dataset_to_csv(d));
}

TEST_CASE("malformed rows name line and column") {
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 2;
    const Dataset d = generate_synthetic(cfg);
    std::string text = dataset_to_csv(d);

    // corrupt the label of the second data row (line 3)
    const auto pos = text.find("\nP000001,") + 9;
    text[pos] = 'x';
    try {
        dataset_from_csv_text(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }
}

TEST_CASE("inconsistent ie is a validation error") {
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 2;
    Dataset d = generate_synthetic(cfg);
    d.records[0].ie[0] += 0.5; // break IE = OD - OS
    CHECK_THROWS_AS(dataset_from_csv_text(dataset_to_csv(d)), ValidationError);
}

TEST_CASE("normalizer constant column floors the std") {
    GeneratorConfig cfg;
    cfg.n_patients = 8;
    cfg.seed = 2;
    Dataset d = generate_synthetic(cfg);
    for (auto& r : d.records) {
        r.od[0] = 5.0;
        r.os[0] = 5.0;
        r.ie[0] = 0.0;
    }
    const NormStats stats = fit_normalizer(d);
    const Dataset n = apply_normalizer(d, stats);
    for (const auto& r : n.records)
        CHECK(r.od[0] == 0.0);
}

TEST_CASE("normalizer two-point column maps to plus and minus one") {
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 2;
    Dataset d = generate_synthetic(cfg);
    d.records.resize(2);
    d.records[0].od[3] = 1.0;
    d.records[1].od[3] = 3.0;
    const NormStats stats = fit_normalizer(d);
    const Dataset n = apply_normalizer(d, stats);
    CHECK(n.records[0].od[3] == doctest::Approx(-1.0));
    CHECK(n.records[1].od[3] == doctest::Approx(1.0));
}

TEST_CASE("normalized training columns have mean 0 and std 1") {
    GeneratorConfig cfg;
    cfg.n_patients = 500;
    cfg.seed = 31;
    const Dataset d = generate_synthetic(cfg);
    const NormStats stats = fit_normalizer(d);
    const Dataset n = apply_normalizer(d, stats);
    for (std::size_t b = 0; b < n.schema().size(); ++b) {
        double mean = 0.0;
        for (const auto& r : n.records)
            mean += r.od[b];
        mean /= static_cast<double>(n.size());
        CHECK(std::abs(mean) < 1e-9);
        double ss = 0.0;
        for (const auto& r : n.records)
            ss += (r.od[b] - mean) * (r.od[b] - mean);
        CHECK(std::abs(std::sqrt(ss / static_cast<double>(n.size())) - 1.0) < 1e-6);
    }
}

TEST_CASE("train stats leave test columns un-centered") {
    GeneratorConfig cfg;
    cfg.n_patients = 400;
    cfg.seed = 32;
    const Dataset d = generate_synthetic(cfg);
    auto [train, test] = split_75_25(d, 1);
    const NormStats train_stats = fit_normalizer(train);
    const NormStats test_stats = fit_normalizer(test);
    bool any_differs = false;
    for (std::size_t b = 0; b < d.schema().size(); ++b)
        if (std::abs(train_stats.mean_od[b] - test_stats.mean_od[b]) > 1e-12)
            any_differs = true;
    CHECK(any_differs);

    const Dataset test_n = apply_normalizer(test, train_stats);
    double mean0 = 0.0;
    for (const auto& r : test_n.records)
        mean0 += r.od[0];
    mean0 /= static_cast<double>(test_n.size());
    CHECK(std::abs(mean0) > 1e-9); // generally nonzero under train stats
}

TEST_CASE("split sizes follow the floor rule") {
    GeneratorConfig cfg;
    cfg.seed = 2;
    cfg.n_patients = 100;
    auto [train100, test100] = split_75_25(generate_synthetic(cfg), 7);
    CHECK(train100.size() == 75);
    CHECK(test100.size() == 25);

    cfg.n_patients = 10;
    auto [train10, test10] = split_75_25(generate_synthetic(cfg), 7);
    CHECK(train10.size() == 7);
    CHECK(test10.size() == 3);
}

TEST_CASE("split is deterministic and a partition") {
    GeneratorConfig cfg;
    cfg.seed = 2;
    cfg.n_patients = 101;
    const Dataset d = generate_synthetic(cfg);
    auto [tr1, te1] = split_75_25(d, 55);
    auto [tr2, te2] = split_75_25(d, 55);

    auto ids = [](const Dataset& x) {
        std::set<std::string> s;
        for (const auto& r : x.records)
            s.insert(r.patient_id);
        return s;
    };
    CHECK(ids(tr1) == ids(tr2));
    CHECK(ids(te1) == ids(te2));

    std::set<std::string> all = ids(tr1);
    for (const auto& id : ids(te1)) {
        CHECK(all.find(id) == all.end()); // disjoint
        all.insert(id);
    }
    CHECK(all.size() == d.size()); // exhaustive
}

TEST_CASE("split rejects tiny datasets") {
    GeneratorConfig cfg;
    cfg.n_patients = 4;
    cfg.seed = 2;
    Dataset d = generate_synthetic(cfg);
    d.records.resize(3);
    CHECK_THROWS_AS(split_75_25(d, 1), ConfigError);
}

TEST_CASE("order views: identity when unshuffled") {
    GeneratorConfig cfg;
    cfg.n_patients = 5;
    cfg.seed = 2;
    const Dataset d = generate_synthetic(cfg);
    const auto views = shuffle_order_augment(d, 1, nullptr);
    REQUIRE(views.size() == 5);
    for (const auto& v : views)
        CHECK(v.perm == identity_permutation(17));
}

TEST_CASE("order views: copies multiply the training view") {
    GeneratorConfig cfg;
    cfg.n_patients = 8;
    cfg.seed = 2;
    const Dataset d = generate_synthetic(cfg);
    RngStream rng(3);
    const auto views = shuffle_order_augment(d, 3, &rng);
    CHECK(views.size() == 24);
}

TEST_CASE("order views: fixed seed reproduces permutations") {
    GeneratorConfig cfg;
    cfg.n_patients = 6;
    cfg.seed = 2;
    const Dataset d = generate_synthetic(cfg);
    RngStream a(9), b(9);
    const auto va = shuffle_order_augment(d, 2, &a);
    const auto vb = shuffle_order_augment(d, 2, &b);
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = 0; i < va.size(); ++i)
        CHECK(va[i].perm == vb[i].perm);
}

TEST_CASE("partition_halves splits 9/8 in permutation order") {
    const auto& schema = BiomarkerSchema::standard();
    const auto id = identity_permutation(17);
    auto [s1, s2] = partition_halves(schema, id);
    REQUIRE(s1.size() == 9);
    REQUIRE(s2.size() == 8);
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(s1[i] == i);
    for (std::size_t i = 0; i < 8; ++i)
        CHECK(s2[i] == 9 + i);
}

TEST_CASE("partition_halves reversed permutation") {
    const auto& schema = BiomarkerSchema::standard();
    std::vector<std::size_t> rev(17);
    for (std::size_t i = 0; i < 17; ++i)
        rev[i] = 16 - i;
    auto [s1, s2] = partition_halves(schema, rev);
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(s1[i] == 16 - i); // last nine biomarkers, reversed
}

TEST_CASE("partition_halves is disjoint and exhaustive for any permutation") {
    const auto& schema = BiomarkerSchema::standard();
    RngStream rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const auto perm = rng.permutation(17);
        auto [s1, s2] = partition_halves(schema, perm);
        std::set<std::size_t> seen(s1.begin(), s1.end());
        for (std::size_t v : s2) {
            CHECK(seen.find(v) == seen.end());
            seen.insert(v);
        }
        CHECK(seen.size() == 17);
    }
}

TEST_CASE("partition_halves rejects invalid permutations") {
    const auto& schema = BiomarkerSchema::standard();
    std::vector<std::size_t> bad(17, 0);
    CHECK_THROWS_AS(partition_halves(schema, bad), ConfigError);
    CHECK_THROWS_AS(partition_halves(schema, identity_permutation(16)), ConfigError);
}

TEST_CASE("file save/load round-trip") {
    GeneratorConfig cfg;
    cfg.n_patients = 20;
    cfg.seed = 8;
    const Dataset d = generate_synthetic(cfg);
    const auto path =
        (std::filesystem::temp_directory_path() / "trilstm_test_roundtrip.csv").string();
    save_csv(d, path);
    const Dataset back = load_csv(path);
    CHECK(dataset_to_csv(back) == dataset_to_csv(d));
    std::filesystem::remove(path);
}

} // TEST_SUITE
