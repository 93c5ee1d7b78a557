#include <doctest.h>

#include <cmath>
#include <set>

#include "deepsep/errors.hpp"
#include "deepsep/model.hpp"
#include "support.hpp"

using namespace deepsep;
using testing::random_tensor;
using testing::random_vector;

namespace {

ArchConfig tiny_arch() {
    ArchConfig a;
    a.branch_channels = 2;
    return a;
}

ForwardResult run(const NetworkParams& p, const Tensor& x, IndicatorMode mode) {
    Tape tape = Tape::inference();
    return forward(tape, x, p, mode);
}

bool all_zero(const Tensor& t) {
    for (double v : t.values()) {
        if (v != 0.0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("zero parameters give a zero output") {
    const auto p = make_zero_params(ArchConfig{});
    const auto r = run(p, random_tensor({2, 1, 64}, 1), IndicatorMode::Signal);
    CHECK(all_zero(r.output));
    CHECK(all_zero(r.embedding));
    for (double v : r.attenuation.values()) CHECK(v == 0.5);
}

TEST_CASE("forward preserves length") {
    const auto p = init_weights(ArchConfig{}, 3);
    for (std::size_t len : {15u, 64u, 512u, 777u, 1000u}) {
        CAPTURE(len);
        const auto r = run(p, random_tensor({2, 1, len}, len), IndicatorMode::Signal);
        CHECK(r.output.shape() == Shape{2, 1, len});
        CHECK(r.embedding.shape() == Shape{2, 32, len});
        CHECK(r.attenuation.shape() == r.embedding.shape());
        CHECK(r.attenuated.shape() == r.embedding.shape());
    }
}

TEST_CASE("forward rejects multi-channel input") {
    const auto p = init_weights(tiny_arch(), 0);
    Tape tape;
    CHECK_THROWS_AS(forward(tape, Tensor::zeros({1, 2, 32}), p, IndicatorMode::Signal), ShapeError);
    CHECK_THROWS_AS(forward(tape, Tensor::zeros({1, 32}), p, IndicatorMode::Signal), ShapeError);
}

TEST_CASE("inception block with one identity branch passes the activated input") {
    const std::size_t cin = 2, cb = 2, len = 9;
    const auto p = make_zero_params(ArchConfig{});
    InceptionBlockParams block;
    const std::array<std::size_t, 4> kernels{3, 5, 11, 15};
    for (std::size_t i = 0; i < 4; ++i) {
        block.branches[i].weight = Tensor::zeros({cb, cin, kernels[i]});
        block.branches[i].bias = Tensor::zeros({cb});
    }
    auto w = block.branches[0].weight.data();
    for (std::size_t o = 0; o < cb; ++o) w[(o * cin + o) * 3 + 1] = 1.0;

    const auto x = random_tensor({1, cin, len}, 7);
    Tape tape = Tape::inference();
    const auto y = inception_forward(tape, x, block);
    REQUIRE(y.shape() == Shape{1, 4 * cb, len});
    for (std::size_t c = 0; c < 4 * cb; ++c) {
        for (std::size_t t = 0; t < len; ++t) {
            const double expected = c < cb ? std::max(0.0, x.values()[c * len + t]) : 0.0;
            CHECK(y.values()[c * len + t] == expected);
        }
    }
}

TEST_CASE("gate halves sum to the embedding") {
    for (std::uint64_t draw = 0; draw < 100; ++draw) {
        const auto p = init_weights(tiny_arch(), draw);
        const auto x = random_tensor({1, 1, 48}, 1000 + draw, false, 1.0 + static_cast<double>(draw % 7));
        const auto s = run(p, x, IndicatorMode::Signal);
        const auto a = run(p, x, IndicatorMode::Artifact);
        for (std::size_t i = 0; i < s.embedding.numel(); ++i) {
            const double z = s.embedding.values()[i];
            if (std::abs(s.attenuated.values()[i] + a.attenuated.values()[i] - z) > 1e-12) {
                FAIL("gating identity broken at draw " << draw << " element " << i);
            }
        }
    }
}

TEST_CASE("attenuation lies strictly inside (0, 1)") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = run(init_weights(ArchConfig{}, seed), random_tensor({2, 1, 40}, seed, false, 3.0),
                           IndicatorMode::Signal);
        for (double v : r.attenuation.values()) {
            REQUIRE(v > 0.0);
            REQUIRE(v < 1.0);
        }
    }
}

TEST_CASE("mode flip only changes the gate") {
    const auto p = init_weights(ArchConfig{}, 5);
    const auto x = random_tensor({2, 1, 100}, 6);
    const auto s = run(p, x, IndicatorMode::Signal);
    const auto a = run(p, x, IndicatorMode::Artifact);
    CHECK(s.embedding.values() == a.embedding.values());
    CHECK(s.attenuation.values() == a.attenuation.values());
    CHECK(s.output.values() != a.output.values());
}

TEST_CASE("initialisation") {
    const ArchConfig arch;
    const auto a = init_weights(arch, 11);
    const auto b = init_weights(arch, 11);
    const auto c = init_weights(arch, 12);
    const auto na = a.named(), nb = b.named(), nc = c.named();
    REQUIRE(na.size() == nb.size());
    bool any_difference = false;
    for (std::size_t i = 0; i < na.size(); ++i) {
        CHECK(na[i].second.values() == nb[i].second.values());
        if (na[i].second.values() != nc[i].second.values()) any_difference = true;
        const auto& t = na[i].second;
        if (t.rank() == 3) {
            const double bound = std::sqrt(6.0 / static_cast<double>(t.dim(1) * t.dim(2)));
            for (double v : t.values()) CHECK(std::abs(v) <= bound);
        } else {
            for (double v : t.values()) CHECK(v == 0.0);
        }
    }
    CHECK(any_difference);
}

TEST_CASE("parameter inventory holds convolutions only") {
    const ArchConfig arch;
    const auto p = init_weights(arch, 0);
    std::set<std::size_t> widths;
    std::size_t count = 0;
    for (const auto& [name, t] : p.named()) {
        CAPTURE(name);
        if (name.ends_with(".weight")) {
            REQUIRE(t.rank() == 3);
            widths.insert(t.dim(2));
        } else {
            REQUIRE(name.ends_with(".bias"));
            REQUIRE(t.rank() == 1);
        }
        count += t.numel();
    }
    CHECK(widths == std::set<std::size_t>{1, 3, 5, 11, 15});
    CHECK(count == p.parameter_count());

    // Per block: sum over kernels of Cb * Cin * k weights plus 4 * Cb biases.
    const std::size_t cb = 8, c = 32, ksum = 3 + 5 + 11 + 15;
    auto block = [&](std::size_t cin) { return cb * cin * ksum + 4 * cb; };
    // Encoder and decomposer start from the 1-channel input; the decoder
    // starts from the embedding.
    const std::size_t expected = 2 * (block(1) + block(c)) + 2 * block(c) + (c * c + c) + (c + 1);
    CHECK(p.parameter_count() == expected);
    CHECK(p.named().front().first == "encoder.block0.branch0.weight");
}

TEST_CASE("architecture validation") {
    ArchConfig a;
    a.branch_channels = 0;
    CHECK_THROWS_AS(a.validate(), std::invalid_argument);
    ArchConfig b;
    b.kernels = {3, 4, 11, 15};
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
    ArchConfig c;
    c.decoder_blocks = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(ArchConfig{}.largest_kernel() == 15);
    CHECK(ArchConfig{}.embed_channels() == 32);
}

TEST_CASE("segment scale") {
    const std::vector<double> a{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(segment_scale(a) == doctest::Approx(2.0).epsilon(1e-15));
    const std::vector<double> zeros(16, 0.0);
    CHECK(segment_scale(zeros) == 1.0);
    const std::vector<double> flat(16, 3.0);
    CHECK(segment_scale(flat) == 1.0);
}

TEST_CASE("separate restores the input scale") {
    const auto p = init_weights(ArchConfig{}, 21);
    const auto x = random_vector(200, 22, 30.0);
    for (const auto mode : {IndicatorMode::Signal, IndicatorMode::Artifact}) {
        const auto base = separate(p, x, mode);
        REQUIRE(base.size() == x.size());
        for (double c : {1e-3, 0.5, 40.0}) {
            std::vector<double> scaled(x);
            for (double& v : scaled) v *= c;
            const auto out = separate(p, scaled, mode);
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(out[i] == doctest::Approx(c * base[i]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("separate_batch matches per-row separate") {
    const auto p = init_weights(tiny_arch(), 2);
    const std::vector<std::vector<double>> rows{random_vector(50, 1, 5.0), random_vector(50, 2, 0.1),
                                                std::vector<double>(50, 0.0)};
    const auto batch = separate_batch(p, rows, IndicatorMode::Signal);
    REQUIRE(batch.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto single = separate(p, rows[i], IndicatorMode::Signal);
        for (std::size_t t = 0; t < single.size(); ++t) {
            CHECK(batch[i][t] == doctest::Approx(single[t]).epsilon(1e-12));
        }
    }
}

TEST_CASE("indicator names") {
    CHECK(parse_indicator("signal") == IndicatorMode::Signal);
    CHECK(parse_indicator("artifact") == IndicatorMode::Artifact);
    CHECK(std::string(indicator_name(IndicatorMode::Artifact)) == "artifact");
    CHECK_THROWS_AS(parse_indicator("noise"), std::invalid_argument);
}

TEST_CASE("weight file round trip") {
    const auto dir = testing::scratch_dir("model_io");
    const auto p = init_weights(ArchConfig{}, 31);
    save_weights(p, dir / "w.dsw");
    const auto q = load_weights(dir / "w.dsw");
    CHECK(q.arch == p.arch);
    const auto x = random_tensor({1, 1, 128}, 32, false, 2.0);
    const auto a = run(p, x, IndicatorMode::Signal).output;
    const auto b = run(q, x, IndicatorMode::Signal).output;
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
        scale = std::max(scale, std::abs(a.values()[i]));
    }
    CHECK(worst <= 1e-6 * scale);

    const auto tiny = init_weights(tiny_arch(), 1);
    save_weights(tiny, dir / "tiny.dsw");
    CHECK(load_weights(dir / "tiny.dsw").arch == tiny_arch());
    CHECK(load_weights(dir / "tiny.dsw", tiny_arch()).parameter_count() == tiny.parameter_count());
    std::filesystem::remove_all(dir);
}

TEST_CASE("weight file errors") {
    const auto dir = testing::scratch_dir("model_err");
    const auto p = init_weights(tiny_arch(), 1);
    save_weights(p, dir / "good.dsw");
    const auto bytes = testing::slurp(dir / "good.dsw");

    auto kind_of = [](const std::function<void()>& f) {
        try {
            f();
        } catch (const FormatError& e) {
            return e.kind();
        }
        FAIL("no FormatError");
        return FormatErrorKind::Io;
    };

    SUBCASE("missing file") {
        CHECK(kind_of([&] { load_weights(dir / "absent.dsw"); }) == FormatErrorKind::Io);
    }
    SUBCASE("corrupted magic") {
        auto bad = bytes;
        bad[0] = 'X';
        testing::spit(dir / "bad.dsw", bad);
        CHECK(kind_of([&] { load_weights(dir / "bad.dsw"); }) == FormatErrorKind::BadMagic);
    }
    SUBCASE("cut inside a record") {
        testing::spit(dir / "cut.dsw", bytes.substr(0, bytes.size() - 3));
        CHECK(kind_of([&] { load_weights(dir / "cut.dsw"); }) == FormatErrorKind::Truncated);
    }
    SUBCASE("missing tensor record") {
        auto records = read_dsw(dir / "good.dsw");
        records.erase(records.begin() + 5);
        write_dsw(dir / "missing.dsw", records);
        CHECK(kind_of([&] { load_weights(dir / "missing.dsw"); }) == FormatErrorKind::MissingRecord);
    }
    SUBCASE("declared count exceeds records") {
        auto declared = bytes;
        declared[4] = static_cast<char>(static_cast<unsigned char>(declared[4]) + 1);
        testing::spit(dir / "count.dsw", declared);
        CHECK(kind_of([&] { read_dsw(dir / "count.dsw"); }) == FormatErrorKind::MissingRecord);
    }
    SUBCASE("architecture mismatch") {
        CHECK(kind_of([&] { load_weights(dir / "good.dsw", ArchConfig{}); }) == FormatErrorKind::ShapeMismatch);
    }
    std::filesystem::remove_all(dir);
}
