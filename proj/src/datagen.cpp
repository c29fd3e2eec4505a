#include "hbnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hbnet/io.hpp"
#include "hbnet/parallel.hpp"

namespace hbnet {

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::Digits5: return "digits5";
        case DatasetKind::Mixed5: return "mixed5";
        case DatasetKind::Letters5: return "letters5";
    }
    throw InternalError("bad DatasetKind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "digits5") return DatasetKind::Digits5;
    if (s == "mixed5") return DatasetKind::Mixed5;
    if (s == "letters5") return DatasetKind::Letters5;
    fail("unknown dataset kind '" + s + "' (expected digits5, mixed5 or letters5)");
}

void DatasetConfig::validate() const {
    check(scale > 0.0, "dataset: scale must be positive");
    check(image_size >= 1, "dataset: image_size must be >= 1");
    check(render_size % image_size == 0,
          "dataset: render_size must be an integer multiple of image_size");
    check(render_size % 64 == 0, "dataset: render_size must be a multiple of 64");
    check(resolved_train() >= 1 && resolved_val() >= 1 && resolved_test() >= 1,
          "dataset: split sizes must be positive");
}

ClutterSample render_clutter(u64 seed, const GlyphSet& glyphs, i64 k, i64 canvas_h, i64 canvas_w) {
    check(k >= 1 && k <= glyphs.size(),
          "render_clutter: k must be in [1, " + std::to_string(glyphs.size()) + "], got " +
              std::to_string(k));
    for (i64 i = 0; i < glyphs.size(); ++i)
        check(glyphs.glyph(i).h <= canvas_h && glyphs.glyph(i).w <= canvas_w,
              "render_clutter: glyph does not fit the canvas");

    ClutterSample sample;
    sample.seed = seed;
    sample.image.h = canvas_h;
    sample.image.w = canvas_w;
    sample.image.px.assign(static_cast<size_t>(canvas_h * canvas_w), 0);

    // symbols sampled without replacement; the k chosen indices are drawn
    // back to front in shuffle order
    std::vector<i64> order(static_cast<size_t>(glyphs.size()));
    std::iota(order.begin(), order.end(), 0);
    const u64 key = rng::key_from_seed(seed);
    rng::shuffle(order, rng::split(key, 0));
    order.resize(static_cast<size_t>(k));

    rng::Sequence pos_seq(rng::split(key, 1));
    for (i64 idx : order) {
        const Glyph& g = glyphs.glyph(idx);
        const i64 y0 = static_cast<i64>(pos_seq.next_below(static_cast<u64>(canvas_h - g.h + 1)));
        const i64 x0 = static_cast<i64>(pos_seq.next_below(static_cast<u64>(canvas_w - g.w + 1)));
        for (i64 y = 0; y < g.h; ++y)
            for (i64 x = 0; x < g.w; ++x) {
                const size_t gi = static_cast<size_t>(y * g.w + x);
                if (g.outline[gi])
                    sample.image.px[static_cast<size_t>((y0 + y) * canvas_w + (x0 + x))] = 0;
                else if (g.ink[gi])
                    sample.image.px[static_cast<size_t>((y0 + y) * canvas_w + (x0 + x))] = 255;
            }
        sample.labels |= u64{1} << idx;
        sample.draw_order.push_back(idx);
        sample.positions.emplace_back(y0, x0);
    }
    return sample;
}

Image downsample(const Image& src, i64 out_h, i64 out_w) {
    check(out_h >= 1 && out_w >= 1, "downsample: empty target");
    check(src.h % out_h == 0 && src.w % out_w == 0,
          "downsample: source " + std::to_string(src.h) + "x" + std::to_string(src.w) +
              " is not an integer multiple of " + std::to_string(out_h) + "x" + std::to_string(out_w));
    const i64 fy = src.h / out_h, fx = src.w / out_w;
    const i64 area = fy * fx;
    Image out;
    out.h = out_h;
    out.w = out_w;
    out.px.resize(static_cast<size_t>(out_h * out_w));
    for (i64 y = 0; y < out_h; ++y)
        for (i64 x = 0; x < out_w; ++x) {
            i64 sum = 0;
            for (i64 dy = 0; dy < fy; ++dy)
                for (i64 dx = 0; dx < fx; ++dx)
                    sum += src.px[static_cast<size_t>((y * fy + dy) * src.w + (x * fx + dx))];
            // round half-up, exactly, in integer arithmetic
            out.px[static_cast<size_t>(y * out_w + x)] = static_cast<u8>((2 * sum + area) / (2 * area));
        }
    return out;
}

Dataset generate_split(const DatasetConfig& cfg, int split, i64 count) {
    cfg.validate();
    check(split >= 0 && split <= 2, "generate_split: split must be 0, 1 or 2");
    const i64 scale = cfg.render_size * 5 / 64;  // render pixels per font pixel
    const i64 outline = cfg.render_size / cfg.image_size;
    GlyphSet glyphs = cfg.kind == DatasetKind::Letters5 ? GlyphSet::letters(scale, outline)
                                                        : GlyphSet::digits(scale, outline);
    Dataset ds;
    ds.h = cfg.image_size;
    ds.w = cfg.image_size;
    ds.n_classes = cfg.n_classes();
    ds.images.resize(static_cast<size_t>(count));
    ds.labels.resize(static_cast<size_t>(count));
    ds.seeds.resize(static_cast<size_t>(count));

    const u64 split_key = rng::split(rng::key_from_seed(cfg.seed), static_cast<u64>(split));
    const bool mixed = cfg.kind == DatasetKind::Mixed5;
    parallel_for(count, [&](i64 begin, i64 end) {
        for (i64 i = begin; i < end; ++i) {
            const u64 sample_seed = rng::split(split_key, static_cast<u64>(i));
            const i64 k = mixed ? 1 + (i % 5) : 5;
            ClutterSample s = render_clutter(sample_seed, glyphs, k, cfg.render_size, cfg.render_size);
            ds.images[static_cast<size_t>(i)] = downsample(s.image, cfg.image_size, cfg.image_size);
            ds.labels[static_cast<size_t>(i)] = s.labels;
            ds.seeds[static_cast<size_t>(i)] = sample_seed;
        }
    });
    return ds;
}

namespace {
constexpr char kDatasetMagic[4] = {'H', 'B', 'D', 'S'};
constexpr char kStatsMagic[4] = {'H', 'B', 'N', 'S'};
constexpr u16 kDatasetVersion = 1;
}  // namespace

std::string dataset_to_bytes(const Dataset& ds) {
    std::string out;
    io::put_bytes(out, kDatasetMagic, 4);
    io::put_le<u16>(out, kDatasetVersion);
    io::put_le<u32>(out, static_cast<u32>(ds.size()));
    io::put_le<u16>(out, static_cast<u16>(ds.h));
    io::put_le<u16>(out, static_cast<u16>(ds.w));
    io::put_le<u16>(out, static_cast<u16>(ds.n_classes));
    const i64 label_bytes = (ds.n_classes + 7) / 8;
    for (i64 i = 0; i < ds.size(); ++i) {
        const auto& img = ds.images[static_cast<size_t>(i)];
        check_internal(img.h == ds.h && img.w == ds.w, "dataset_to_bytes: inconsistent image size");
        io::put_bytes(out, img.px.data(), img.px.size());
        const u64 mask = ds.labels[static_cast<size_t>(i)];
        for (i64 b = 0; b < label_bytes; ++b) io::put_le<u8>(out, static_cast<u8>(mask >> (8 * b)));
        io::put_le<u64>(out, ds.seeds[static_cast<size_t>(i)]);
    }
    return out;
}

Dataset dataset_from_bytes(const std::string& bytes) {
    io::Reader r(bytes);
    if (r.get_string(4) != std::string(kDatasetMagic, 4)) fail("dataset: bad magic (not an HBDS file)");
    const u16 version = r.get_le<u16>();
    if (version != kDatasetVersion) fail("dataset: unsupported format version " + std::to_string(version));
    Dataset ds;
    const u32 count = r.get_le<u32>();
    ds.h = r.get_le<u16>();
    ds.w = r.get_le<u16>();
    ds.n_classes = r.get_le<u16>();
    check(ds.h >= 1 && ds.w >= 1 && ds.n_classes >= 1 && ds.n_classes <= 64, "dataset: bad header");
    const i64 label_bytes = (ds.n_classes + 7) / 8;
    ds.images.resize(count);
    ds.labels.resize(count);
    ds.seeds.resize(count);
    for (u32 i = 0; i < count; ++i) {
        Image& img = ds.images[i];
        img.h = ds.h;
        img.w = ds.w;
        img.px.resize(static_cast<size_t>(ds.h * ds.w));
        r.get_bytes(img.px.data(), img.px.size());
        u64 mask = 0;
        for (i64 b = 0; b < label_bytes; ++b) mask |= static_cast<u64>(r.get_le<u8>()) << (8 * b);
        ds.labels[i] = mask;
        ds.seeds[i] = r.get_le<u64>();
    }
    check(r.at_end(), "dataset: trailing bytes after last sample");
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    io::write_file(path, dataset_to_bytes(ds));
}

Dataset load_dataset(const std::string& path) { return dataset_from_bytes(io::read_file(path)); }

NormStats compute_norm_stats(const std::vector<Image>& train_images) {
    check(train_images.size() >= 2, "compute_norm_stats: need at least 2 training images");
    const i64 h = train_images[0].h, w = train_images[0].w;
    for (const auto& img : train_images)
        check(img.h == h && img.w == w, "compute_norm_stats: inconsistent image sizes");
    NormStats stats;
    stats.h = h;
    stats.w = w;
    stats.count = static_cast<i64>(train_images.size());
    stats.mean.resize(static_cast<size_t>(h * w));
    stats.std_dev.resize(static_cast<size_t>(h * w));
    const double n = static_cast<double>(train_images.size());
    parallel_for(h * w, [&](i64 begin, i64 end) {
        for (i64 p = begin; p < end; ++p) {
            double sum = 0.0;
            for (const auto& img : train_images) sum += img.px[static_cast<size_t>(p)];
            const double mean = sum / n;
            double sq = 0.0;
            for (const auto& img : train_images) {
                const double d = img.px[static_cast<size_t>(p)] - mean;
                sq += d * d;
            }
            stats.mean[static_cast<size_t>(p)] = mean;
            stats.std_dev[static_cast<size_t>(p)] = std::max(std::sqrt(sq / n), kStdFloor);
        }
    });
    return stats;
}

std::string norm_stats_to_bytes(const NormStats& stats) {
    std::string out;
    io::put_bytes(out, kStatsMagic, 4);
    io::put_le<u16>(out, static_cast<u16>(stats.h));
    io::put_le<u16>(out, static_cast<u16>(stats.w));
    for (double v : stats.mean) io::put_f64(out, v);
    for (double v : stats.std_dev) io::put_f64(out, v);
    return out;
}

NormStats norm_stats_from_bytes(const std::string& bytes) {
    io::Reader r(bytes);
    if (r.get_string(4) != std::string(kStatsMagic, 4)) fail("norm stats: bad magic (not an HBNS file)");
    NormStats stats;
    stats.h = r.get_le<u16>();
    stats.w = r.get_le<u16>();
    check(stats.h >= 1 && stats.w >= 1, "norm stats: bad header");
    stats.mean.resize(static_cast<size_t>(stats.h * stats.w));
    stats.std_dev.resize(static_cast<size_t>(stats.h * stats.w));
    for (double& v : stats.mean) v = r.get_f64();
    for (double& v : stats.std_dev) v = r.get_f64();
    check(r.at_end(), "norm stats: trailing bytes");
    return stats;
}

void save_norm_stats(const NormStats& stats, const std::string& path) {
    io::write_file(path, norm_stats_to_bytes(stats));
}

NormStats load_norm_stats(const std::string& path) {
    return norm_stats_from_bytes(io::read_file(path));
}

void normalize_into(const Image& img, const NormStats& stats, double* out) {
    check(img.h == stats.h && img.w == stats.w, "normalize: image size does not match stats");
    const size_t n = static_cast<size_t>(img.h * img.w);
    for (size_t p = 0; p < n; ++p) out[p] = (img.px[p] - stats.mean[p]) / stats.std_dev[p];
}

Tensor normalize(const Image& img, const NormStats& stats) {
    Tensor t = Tensor::zeros({1, 1, img.h, img.w});
    normalize_into(img, stats, t.data().data());
    return t;
}

void add_gaussian_noise(double* img, i64 n, double sigma, u64 key) {
    check(sigma >= 0.0, "add_gaussian_noise: sigma must be >= 0");
    if (sigma == 0.0) return;
    for (i64 i = 0; i < n; ++i) img[i] += sigma * rng::normal_at(key, static_cast<u64>(i));
}

void add_salt_pepper(Image& img, double snr, u64 key) {
    check(snr >= 0.0 && snr <= 1.0, "add_salt_pepper: snr must be in [0, 1]");
    if (snr >= 1.0) return;
    for (size_t i = 0; i < img.px.size(); ++i) {
        if (rng::uniform_at(key, 2 * i) >= snr)
            img.px[i] = rng::uniform_at(key, 2 * i + 1) < 0.5 ? 0 : 255;
    }
}

}  // namespace hbnet
