#include <bit>
#include <cmath>
#include <set>

#include "doctest.h"
#include "hbnet/datagen.hpp"
#include "hbnet/io.hpp"
#include "test_support.hpp"

using namespace hbnet;

namespace {

int popcount(u64 v) { return std::popcount(v); }

DatasetConfig small_config(DatasetKind kind = DatasetKind::Digits5) {
    DatasetConfig cfg;
    cfg.kind = kind;
    cfg.seed = 77;
    cfg.train_size = 24;
    cfg.val_size = 6;
    cfg.test_size = 10;
    cfg.render_size = 128;
    cfg.image_size = 32;
    return cfg;
}

}  // namespace

TEST_CASE("glyphs: every symbol is distinct, non-empty, and outline is disjoint from ink") {
    for (const GlyphSet& gs : {GlyphSet::digits(4, 2), GlyphSet::letters(4, 2)}) {
        std::set<std::vector<u8>> seen;
        for (i64 i = 0; i < gs.size(); ++i) {
            const Glyph& g = gs.glyph(i);
            i64 ink_count = 0;
            for (size_t p = 0; p < g.ink.size(); ++p) {
                CHECK(!(g.ink[p] && g.outline[p]));
                ink_count += g.ink[p];
            }
            CHECK(ink_count > 0);
            CHECK(seen.insert(g.ink).second);  // distinct from every other glyph
        }
    }
}

TEST_CASE("render_clutter: label popcount equals the draw count, k=5 for digits") {
    GlyphSet glyphs = GlyphSet::digits(10, 4);
    for (u64 seed : {1ULL, 2ULL, 3ULL}) {
        ClutterSample s = render_clutter(seed, glyphs, 5, 128, 128);
        CHECK(popcount(s.labels) == 5);
        CHECK(s.draw_order.size() == 5);
        std::set<i64> distinct(s.draw_order.begin(), s.draw_order.end());
        CHECK(distinct.size() == 5);
        u64 expected = 0;
        for (i64 idx : s.draw_order) expected |= u64{1} << idx;
        CHECK(s.labels == expected);  // labels are the union of drawn symbols
    }

    ClutterSample one = render_clutter(9, glyphs, 1, 128, 128);
    CHECK(popcount(one.labels) == 1);

    CHECK_THROWS_AS(render_clutter(1, glyphs, 0, 128, 128), ValueError);
    CHECK_THROWS_AS(render_clutter(1, glyphs, 11, 128, 128), ValueError);
}

TEST_CASE("render_clutter is bit-deterministic in its seed") {
    GlyphSet glyphs = GlyphSet::digits(10, 4);
    ClutterSample a = render_clutter(123, glyphs, 5, 160, 160);
    ClutterSample b = render_clutter(123, glyphs, 5, 160, 160);
    CHECK(a.image.px == b.image.px);
    CHECK(a.labels == b.labels);
    ClutterSample c = render_clutter(124, glyphs, 5, 160, 160);
    CHECK(a.image.px != c.image.px);
}

TEST_CASE("occlusion: the front-most glyph is never overdrawn") {
    GlyphSet glyphs = GlyphSet::digits(10, 4);
    for (u64 seed = 30; seed < 40; ++seed) {
        ClutterSample s = render_clutter(seed, glyphs, 5, 160, 160);
        const i64 front = s.draw_order.back();
        const auto [y0, x0] = s.positions.back();
        const Glyph& g = glyphs.glyph(front);
        for (i64 y = 0; y < g.h; ++y)
            for (i64 x = 0; x < g.w; ++x) {
                const size_t gi = static_cast<size_t>(y * g.w + x);
                if (g.ink[gi]) CHECK(s.image.at(y0 + y, x0 + x) == 255);
                if (g.outline[gi]) CHECK(s.image.at(y0 + y, x0 + x) == 0);
            }
    }
}

TEST_CASE("downsample: constants, checkerboard midpoint, block-mean oracle") {
    Image flat{64, 64, std::vector<u8>(64 * 64, 77)};
    Image down = downsample(flat, 32, 32);
    for (u8 v : down.px) CHECK(v == 77);

    Image board{64, 64, std::vector<u8>(64 * 64)};
    for (i64 y = 0; y < 64; ++y)
        for (i64 x = 0; x < 64; ++x) board.px[static_cast<size_t>(y * 64 + x)] = (y + x) % 2 ? 255 : 0;
    Image mid = downsample(board, 32, 32);
    for (u8 v : mid.px) CHECK(v == 128);  // 127.5 rounded half-up

    // seeded random 256x256 against an independent per-block mean
    Image noise{256, 256, std::vector<u8>(256 * 256)};
    for (size_t i = 0; i < noise.px.size(); ++i)
        noise.px[i] = static_cast<u8>(rng::at(rng::key_from_seed(500), i) & 0xFF);
    Image small = downsample(noise, 32, 32);
    for (i64 y = 0; y < 32; ++y)
        for (i64 x = 0; x < 32; ++x) {
            double sum = 0;
            for (i64 dy = 0; dy < 8; ++dy)
                for (i64 dx = 0; dx < 8; ++dx) sum += noise.px[static_cast<size_t>((8 * y + dy) * 256 + 8 * x + dx)];
            const double mean = sum / 64.0;
            CHECK(small.at(y, x) == static_cast<u8>(std::floor(mean + 0.5)));
        }

    Image odd{33, 64, std::vector<u8>(33 * 64, 0)};
    CHECK_THROWS_AS(downsample(odd, 32, 32), ValueError);
}

TEST_CASE("generate_split: determinism, byte-identical files, mixed stratification") {
    auto cfg = small_config();
    Dataset a = generate_split(cfg, 0, cfg.resolved_train());
    Dataset b = generate_split(cfg, 0, cfg.resolved_train());
    CHECK(dataset_to_bytes(a) == dataset_to_bytes(b));
    Dataset val = generate_split(cfg, 1, cfg.resolved_val());
    CHECK(dataset_to_bytes(a) != dataset_to_bytes(val));
    for (i64 i = 0; i < a.size(); ++i) CHECK(popcount(a.labels[static_cast<size_t>(i)]) == 5);

    auto mixed_cfg = small_config(DatasetKind::Mixed5);
    mixed_cfg.train_size = 20;
    Dataset mixed = generate_split(mixed_cfg, 0, 20);
    std::array<int, 6> per_count{};
    for (i64 i = 0; i < 20; ++i) per_count[static_cast<size_t>(popcount(mixed.labels[static_cast<size_t>(i)]))]++;
    for (int k = 1; k <= 5; ++k) CHECK(per_count[static_cast<size_t>(k)] == 4);  // 20% per count

    auto letters_cfg = small_config(DatasetKind::Letters5);
    Dataset letters = generate_split(letters_cfg, 0, 8);
    CHECK(letters.n_classes == 26);
    for (i64 i = 0; i < 8; ++i) CHECK(popcount(letters.labels[static_cast<size_t>(i)]) == 5);
}

TEST_CASE("dataset files round-trip bit-exactly") {
    auto cfg = small_config();
    Dataset ds = generate_split(cfg, 2, 10);
    test_support::TempDir dir("hbds");
    save_dataset(ds, dir.file("t.hbds"));
    Dataset back = load_dataset(dir.file("t.hbds"));
    CHECK(dataset_to_bytes(back) == dataset_to_bytes(ds));
    CHECK(back.n_classes == ds.n_classes);
    CHECK(back.labels == ds.labels);
    CHECK(back.seeds == ds.seeds);

    auto bytes = dataset_to_bytes(ds);
    CHECK_THROWS_AS(dataset_from_bytes(bytes.substr(0, bytes.size() - 3)), ValueError);
    bytes[0] = 'Z';
    CHECK_THROWS_AS(dataset_from_bytes(bytes), ValueError);
}

TEST_CASE("norm stats: two-point example, degenerate pixels, moment oracle") {
    Image i0{1, 2, {0, 10}};
    Image i1{1, 2, {2, 10}};
    NormStats stats = compute_norm_stats({i0, i1});
    CHECK(stats.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(stats.std_dev[0] == doctest::Approx(1.0).epsilon(1e-15));  // population std
    CHECK(stats.std_dev[1] == kStdFloor);  // constant pixel floored

    double out[2];
    normalize_into(i0, stats, out);
    CHECK(out[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out[1] == 0.0);  // degenerate pixel normalizes to zero
    normalize_into(i1, stats, out);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));

    // seeded random set: normalized training data has mean ~0 and std ~1
    auto cfg = small_config();
    cfg.train_size = 50;
    Dataset ds = generate_split(cfg, 0, 50);
    NormStats s2 = compute_norm_stats(ds.images);
    const size_t n_px = static_cast<size_t>(s2.h * s2.w);
    std::vector<double> sum(n_px, 0.0), sq(n_px, 0.0), buf(n_px);
    for (const auto& img : ds.images) {
        normalize_into(img, s2, buf.data());
        for (size_t p = 0; p < n_px; ++p) {
            sum[p] += buf[p];
            sq[p] += buf[p] * buf[p];
        }
    }
    for (size_t p = 0; p < n_px; ++p) {
        CHECK(std::abs(sum[p] / 50.0) <= 1e-10);
        const double var = sq[p] / 50.0;
        const bool floored = s2.std_dev[p] == kStdFloor;
        if (!floored) CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }

    CHECK_THROWS_AS(compute_norm_stats({}), ValueError);
    CHECK_THROWS_AS(compute_norm_stats({i0}), ValueError);
}

TEST_CASE("norm stats files round-trip") {
    auto cfg = small_config();
    Dataset ds = generate_split(cfg, 0, 12);
    NormStats stats = compute_norm_stats(ds.images);
    test_support::TempDir dir("hbns");
    save_norm_stats(stats, dir.file("s.hbns"));
    NormStats back = load_norm_stats(dir.file("s.hbns"));
    CHECK(back.h == stats.h);
    CHECK(back.mean == stats.mean);
    CHECK(back.std_dev == stats.std_dev);
}

TEST_CASE("gaussian noise: identity at sigma 0, unit-variance moment check, determinism") {
    std::vector<double> img(1024, 0.0);
    add_gaussian_noise(img.data(), 1024, 0.0, rng::key_from_seed(1));
    for (double v : img) CHECK(v == 0.0);

    add_gaussian_noise(img.data(), 1024, 1.0, rng::key_from_seed(2));
    double mean = 0.0;
    for (double v : img) mean += v;
    mean /= 1024.0;
    double var = 0.0;
    for (double v : img) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / 1024.0);
    CHECK(sd >= 0.9);
    CHECK(sd <= 1.1);

    std::vector<double> again(1024, 0.0);
    add_gaussian_noise(again.data(), 1024, 1.0, rng::key_from_seed(2));
    CHECK(std::memcmp(again.data(), img.data(), 1024 * sizeof(double)) == 0);
}

TEST_CASE("salt-and-pepper: identity at snr 1, extremes at snr 0, corruption fraction") {
    Image img{32, 32, std::vector<u8>(1024, 100)};
    Image copy = img;
    add_salt_pepper(copy, 1.0, rng::key_from_seed(3));
    CHECK(copy.px == img.px);

    add_salt_pepper(copy, 0.0, rng::key_from_seed(4));
    for (u8 v : copy.px) CHECK((v == 0 || v == 255));

    Image half = img;
    add_salt_pepper(half, 0.5, rng::key_from_seed(5));
    i64 corrupted = 0;
    for (u8 v : half.px)
        if (v != 100) ++corrupted;
    const double frac = static_cast<double>(corrupted) / 1024.0;
    CHECK(frac >= 0.45);
    CHECK(frac <= 0.55);

    CHECK_THROWS_AS(add_salt_pepper(half, 1.5, 1), ValueError);
}
