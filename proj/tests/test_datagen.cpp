#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include "deepsep/datagen.hpp"
#include "deepsep/errors.hpp"
#include "support.hpp"

using namespace deepsep;
using testing::random_vector;

namespace {

std::vector<Segment> random_pool(std::size_t count, std::size_t len, std::uint64_t seed, SegmentKind kind,
                                 double scale = 1.0) {
    std::vector<Segment> pool;
    for (std::size_t i = 0; i < count; ++i) pool.push_back({random_vector(len, seed * 7919 + i, scale), kind, i});
    return pool;
}

double chi_square_uniform(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double chi2 = 0.0;
    for (auto c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    return chi2;
}

// Fraction of signal power in [lo, hi) Hz by direct DFT.
double band_fraction(const std::vector<double>& x, double fs, double lo, double hi) {
    const std::size_t n = x.size();
    double band = 0.0, total = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
        }
        const double p = std::norm(acc);
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        total += p;
        if (f >= lo && f < hi) band += p;
    }
    return band / total;
}

}  // namespace

// 9 degrees of freedom: P(chi2 > 27.88) = 0.001.
constexpr double kChi2Critical9 = 27.88;

TEST_CASE("rms hand values") {
    const std::vector<double> a{3.0, 4.0};
    CHECK(rms(a) == doctest::Approx(3.5355339059327378).epsilon(1e-15));
    CHECK(rms(std::vector<double>(5, 0.0)) == 0.0);
    CHECK(rms(std::vector<double>(7, -2.5)) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK_THROWS_AS(rms(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("lambda for target SNR") {
    const std::vector<double> ones(8, 1.0), twos(8, 2.0), zeros(8, 0.0);
    CHECK(lambda_for_snr(ones, ones, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    const double lam = lambda_for_snr(ones, twos, -7.0);
    CHECK(lam == doctest::Approx(2.5059361681363611).epsilon(1e-14));
    std::vector<double> scaled(twos);
    for (double& v : scaled) v *= lam;
    CHECK(10.0 * std::log10(rms(ones) / rms(scaled)) == doctest::Approx(-7.0).epsilon(1e-13));
    CHECK_THROWS_AS(lambda_for_snr(ones, zeros, 0.0), std::invalid_argument);
}

TEST_CASE("mixing reproduces the target SNR") {
    const auto eeg = random_pool(50, 128, 1, SegmentKind::CleanEEG, 20.0);
    const auto art = random_pool(50, 128, 2, SegmentKind::EOG, 80.0);
    const auto samples = synthesize(eeg, art, {-7.0, 2.0}, 1000, 42);
    REQUIRE(samples.size() == 1000);
    for (const auto& s : samples) {
        REQUIRE(s.snr_db >= -7.0);
        REQUIRE(s.snr_db <= 2.0);
        const auto ln = s.scaled_artifact();
        REQUIRE(std::abs(snr_db(s.x, ln) - s.snr_db) < 1e-9);
        for (std::size_t t = 0; t < s.y.size(); ++t) REQUIRE(std::abs(s.y[t] - (s.x[t] + s.lambda * s.n[t])) <= 1e-12);
        REQUIRE(s.x == eeg[s.eeg_index].samples);
        REQUIRE(s.n == art[s.artifact_index].samples);
    }
}

TEST_CASE("synthesis is deterministic and handles edge counts") {
    const auto eeg = random_pool(5, 32, 3, SegmentKind::CleanEEG);
    const auto art = random_pool(5, 32, 4, SegmentKind::EMG);
    const auto a = synthesize(eeg, art, {-7.0, 2.0}, 40, 9);
    const auto b = synthesize(eeg, art, {-7.0, 2.0}, 40, 9);
    const auto c = synthesize(eeg, art, {-7.0, 2.0}, 40, 10);
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].snr_db == b[i].snr_db);
        differs = differs || a[i].snr_db != c[i].snr_db;
    }
    CHECK(differs);
    // Sample i does not depend on how many were requested.
    const auto prefix = synthesize(eeg, art, {-7.0, 2.0}, 10, 9);
    for (std::size_t i = 0; i < prefix.size(); ++i) CHECK(prefix[i].y == a[i].y);

    CHECK(synthesize(eeg, art, {-7.0, 2.0}, 0, 9).empty());
    CHECK_THROWS_AS(synthesize({}, art, {-7.0, 2.0}, 3, 9), std::invalid_argument);
    CHECK_THROWS_AS(synthesize(eeg, {}, {-7.0, 2.0}, 3, 9), std::invalid_argument);
    CHECK_THROWS_AS(synthesize(eeg, art, {2.0, -7.0}, 3, 9), std::invalid_argument);
}

TEST_CASE("SNR draws are uniform") {
    const auto eeg = random_pool(4, 16, 5, SegmentKind::CleanEEG);
    const auto art = random_pool(4, 16, 6, SegmentKind::EOG);
    const auto samples = synthesize(eeg, art, {-7.0, 2.0}, 10000, 77);
    std::vector<std::size_t> bins(10, 0);
    for (const auto& s : samples) {
        const auto b = std::min<std::size_t>(9, static_cast<std::size_t>((s.snr_db + 7.0) / 0.9));
        bins[b] += 1;
    }
    CHECK(chi_square_uniform(bins) < kChi2Critical9);
}

TEST_CASE("pairing draws segments uniformly with replacement") {
    const auto eeg = random_pool(10, 8, 7, SegmentKind::CleanEEG);
    const auto art = random_pool(10, 8, 8, SegmentKind::EMG);
    const auto samples = synthesize(eeg, art, {-7.0, 2.0}, 10000, 5);
    std::vector<std::size_t> eeg_counts(10, 0), art_counts(10, 0);
    for (const auto& s : samples) {
        eeg_counts[s.eeg_index] += 1;
        art_counts[s.artifact_index] += 1;
    }
    CHECK(chi_square_uniform(eeg_counts) < kChi2Critical9);
    CHECK(chi_square_uniform(art_counts) < kChi2Critical9);
}

TEST_CASE("fixed SNR levels") {
    const auto eeg = random_pool(6, 32, 9, SegmentKind::CleanEEG);
    const auto art = random_pool(6, 32, 10, SegmentKind::EOG);
    const std::vector<double> levels{-7, -6, -5, -4, -3, -2, -1, 0, 1, 2};
    const auto samples = synthesize_at_levels(eeg, art, levels, 3, 1);
    REQUIRE(samples.size() == 30);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].snr_db == levels[i / 3]);
        CHECK(std::abs(snr_db(samples[i].x, samples[i].scaled_artifact()) - levels[i / 3]) < 1e-9);
    }
}

TEST_CASE("training cases follow their definitions") {
    const auto eeg = random_pool(20, 16, 11, SegmentKind::CleanEEG);
    const auto art = random_pool(20, 16, 12, SegmentKind::EOG);
    const auto samples = synthesize(eeg, art, {-7.0, 2.0}, 300, 3);

    SUBCASE("only case 1") {
        const auto cases = make_training_cases(samples, eeg, art, MixRatios{{1.0, 0.0, 0.0}}, 1);
        REQUIRE(cases.size() == samples.size());
        std::set<std::vector<double>> inputs;
        for (const auto& s : samples) inputs.insert(s.y);
        for (const auto& c : cases) {
            CHECK(c.kind == CaseKind::RawToClean);
            CHECK(c.indicator == IndicatorMode::Signal);
            CHECK(inputs.count(c.input) == 1);
        }
    }
    SUBCASE("cases 2 and 3") {
        const auto cases = make_training_cases(samples, eeg, art, MixRatios{}, 2);
        std::size_t seen[3] = {0, 0, 0};
        for (const auto& c : cases) {
            seen[static_cast<int>(c.kind) - 1] += 1;
            switch (c.kind) {
                case CaseKind::RawToClean:
                    CHECK(c.indicator == IndicatorMode::Signal);
                    CHECK(c.input != c.target);
                    break;
                case CaseKind::CleanToClean:
                    CHECK(c.indicator == IndicatorMode::Signal);
                    CHECK(c.input == c.target);
                    break;
                case CaseKind::ArtifactToArtifact:
                    CHECK(c.indicator == IndicatorMode::Artifact);
                    CHECK(c.input == c.target);
                    break;
            }
        }
        CHECK(seen[0] > 0);
        CHECK(seen[1] > 0);
        CHECK(seen[2] > 0);
        const auto again = make_training_cases(samples, eeg, art, MixRatios{}, 2);
        for (std::size_t i = 0; i < cases.size(); ++i) CHECK(cases[i].input == again[i].input);
    }
}

TEST_CASE("case counts match the multinomial expectation") {
    const auto eeg = random_pool(10, 4, 13, SegmentKind::CleanEEG);
    const auto art = random_pool(10, 4, 14, SegmentKind::EMG);
    const auto samples = synthesize(eeg, art, {-7.0, 2.0}, 10000, 8);
    const MixRatios ratios;
    const auto cases = make_training_cases(samples, eeg, art, ratios, 21);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : cases) counts[static_cast<int>(c.kind) - 1] += 1;
    const double n = static_cast<double>(cases.size());
    for (int k = 0; k < 3; ++k) {
        const double p = ratios.weights[static_cast<std::size_t>(k)];
        CAPTURE(k);
        CHECK(std::abs(static_cast<double>(counts[k]) - n * p) < 3.0 * std::sqrt(n * p * (1.0 - p)));
    }
}

TEST_CASE("ratio validation") {
    CHECK_THROWS_AS(MixRatios({0.5, 0.5, 0.5}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MixRatios({1.2, -0.1, -0.1}).validate(), std::invalid_argument);
    CHECK_NOTHROW(MixRatios({0.8, 0.1, 0.1}).validate());
    CHECK(parse_ratios("0.6,0.2,0.2").weights == std::array<double, 3>{0.6, 0.2, 0.2});
    CHECK_THROWS_AS(parse_ratios("0.5,0.5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_ratios("0.5,0.5,x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_ratios("0.5,0.3,0.3"), std::invalid_argument);
    const auto eeg = random_pool(2, 4, 1, SegmentKind::CleanEEG);
    const auto samples = synthesize(eeg, eeg, {0.0, 0.0}, 5, 1);
    CHECK_THROWS_AS(make_training_cases(samples, eeg, eeg, MixRatios{{0.5, 0.5, 0.5}}, 1), std::invalid_argument);
}

TEST_CASE("derived generators are independent of call order") {
    auto a = derived_rng(1, 5);
    auto b = derived_rng(1, 5);
    auto c = derived_rng(1, 6);
    auto d = derived_rng(1, 5, 1);
    const auto va = a(), vb = b(), vc = c(), vd = d();
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
}

TEST_CASE("segment file round trip") {
    const auto dir = testing::scratch_dir("esg");
    const auto pool = random_pool(100, 64, 15, SegmentKind::EOG, 50.0);
    save_segments(dir / "a.esg", pool);
    const auto loaded = load_segments(dir / "a.esg", SegmentKind::EOG);
    REQUIRE(loaded.size() == pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        CHECK(loaded[i].source_index == i);
        CHECK(loaded[i].kind == SegmentKind::EOG);
        for (std::size_t t = 0; t < 64; ++t) {
            REQUIRE(loaded[i].samples[t] == static_cast<double>(static_cast<float>(pool[i].samples[t])));
        }
    }
    save_segments(dir / "b.esg", loaded);
    CHECK(testing::slurp(dir / "a.esg") == testing::slurp(dir / "b.esg"));
    const auto bytes = testing::slurp(dir / "a.esg");
    CHECK(bytes.size() == 12 + 100 * 64 * 4);
    CHECK(bytes.substr(0, 4) == "ESG1");
    std::filesystem::remove_all(dir);
}

TEST_CASE("segment file errors") {
    const auto dir = testing::scratch_dir("esg_err");
    save_segments(dir / "good.esg", random_pool(3, 10, 1, SegmentKind::CleanEEG));
    const auto bytes = testing::slurp(dir / "good.esg");
    auto kind_of = [](const std::filesystem::path& p) {
        try {
            load_segments(p);
        } catch (const FormatError& e) {
            return e.kind();
        }
        FAIL("no FormatError");
        return FormatErrorKind::Io;
    };
    testing::spit(dir / "cut.esg", bytes.substr(0, bytes.size() - 1));
    CHECK(kind_of(dir / "cut.esg") == FormatErrorKind::Truncated);
    testing::spit(dir / "header.esg", bytes.substr(0, 6));
    CHECK(kind_of(dir / "header.esg") == FormatErrorKind::Truncated);
    testing::spit(dir / "magic.esg", "ESG2" + bytes.substr(4));
    CHECK(kind_of(dir / "magic.esg") == FormatErrorKind::BadMagic);
    testing::spit(dir / "tail.esg", bytes + "xx");
    CHECK(kind_of(dir / "tail.esg") == FormatErrorKind::Invalid);
    CHECK(kind_of(dir / "absent.esg") == FormatErrorKind::Io);

    save_segments(dir / "empty.esg", std::vector<Segment>{});
    CHECK(load_segments(dir / "empty.esg").empty());
    CHECK_THROWS_AS(save_rows(dir / "ragged.esg", {{1.0, 2.0}, {1.0}}), FormatError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("surrogate pools") {
    const SurrogateConfig cfg{512, 256.0};
    for (const auto kind : {SegmentKind::CleanEEG, SegmentKind::EOG, SegmentKind::EMG}) {
        const auto a = make_surrogate_pool(kind, 5, 3, cfg);
        const auto b = make_surrogate_pool(kind, 5, 3, cfg);
        REQUIRE(a.size() == 5);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].samples.size() == 512);
            CHECK(a[i].samples == b[i].samples);
            CHECK(a[i].kind == kind);
            for (double v : a[i].samples) REQUIRE(std::isfinite(v));
            CHECK(rms(a[i].samples) > 0.0);
        }
        CHECK(a[0].samples != a[1].samples);
    }
    double eog_low = 0.0, emg_high = 0.0, eeg_mid = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        eog_low += band_fraction(make_surrogate_segment(SegmentKind::EOG, i, 1, cfg).samples, 256.0, 0.0, 4.0);
        emg_high += band_fraction(make_surrogate_segment(SegmentKind::EMG, i, 1, cfg).samples, 256.0, 20.0, 128.0);
        eeg_mid += band_fraction(make_surrogate_segment(SegmentKind::CleanEEG, i, 1, cfg).samples, 256.0, 1.0, 30.0);
    }
    CHECK(eog_low / 5 > 0.8);
    CHECK(emg_high / 5 > 0.9);
    CHECK(eeg_mid / 5 > 0.6);
}

TEST_CASE("pool split") {
    const auto pool = random_pool(25, 4, 16, SegmentKind::CleanEEG);
    const auto [train, test] = split_pool(pool, 0.2, 7);
    CHECK(test.size() == 5);
    CHECK(train.size() == 20);
    std::set<std::size_t> ids;
    for (const auto& s : train) ids.insert(s.source_index);
    for (const auto& s : test) ids.insert(s.source_index);
    CHECK(ids.size() == 25);
    const auto again = split_pool(pool, 0.2, 7);
    for (std::size_t i = 0; i < test.size(); ++i) CHECK(again.second[i].source_index == test[i].source_index);
    CHECK_THROWS_AS(split_pool(pool, 1.5, 7), std::invalid_argument);
}
