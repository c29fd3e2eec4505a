#pragma once

#include <string>
#include <vector>

#include "hbnet/rng.hpp"
#include "hbnet/tensor.hpp"

namespace hbnet {

struct Image {
    i64 h = 0;
    i64 w = 0;
    std::vector<u8> px;  // row-major grayscale

    u8 at(i64 y, i64 x) const { return px[static_cast<size_t>(y * w + x)]; }
};

// One renderable symbol: an ink mask plus a surrounding outline mask,
// disjoint by construction, both inside an h x w bounding box.
struct Glyph {
    char symbol = '?';
    i64 h = 0;
    i64 w = 0;
    std::vector<u8> ink;
    std::vector<u8> outline;
};

// Fixed-size monochrome glyphs for one charset, built from the embedded
// 5x7 dot-matrix font. Glyph index i corresponds to label bit i.
class GlyphSet {
  public:
    /// scale: render pixels per font pixel; outline_radius: thickness of
    /// the contrasting outline in render pixels.
    static GlyphSet digits(i64 scale, i64 outline_radius);
    static GlyphSet letters(i64 scale, i64 outline_radius);

    const std::string& charset() const { return charset_; }
    i64 size() const { return static_cast<i64>(glyphs_.size()); }
    const Glyph& glyph(i64 i) const { return glyphs_[static_cast<size_t>(i)]; }

  private:
    GlyphSet(std::string charset, i64 scale, i64 outline_radius);

    std::string charset_;
    std::vector<Glyph> glyphs_;
};

struct ClutterSample {
    Image image;
    u64 labels = 0;                  // bit i set iff symbol i is present
    std::vector<i64> draw_order;     // symbol indices, back to front
    std::vector<std::pair<i64, i64>> positions;  // (y, x) per drawn symbol; not persisted
    u64 seed = 0;
};

/// Draw k distinct symbols back to front at uniform-random positions with
/// the whole glyph inside the canvas. Nearer glyphs occlude farther ones:
/// the outline paints background shade, the ink foreground shade.
ClutterSample render_clutter(u64 seed, const GlyphSet& glyphs, i64 k, i64 canvas_h, i64 canvas_w);

/// Box-filter average over factor x factor blocks, rounded half-up.
/// Source dimensions must be integer multiples of the target's.
Image downsample(const Image& src, i64 out_h, i64 out_w);

enum class DatasetKind : u8 { Digits5 = 0, Mixed5 = 1, Letters5 = 2 };
std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Digits5;
    double scale = 1.0;        // fraction of the full-size splits
    u64 seed = 0;
    i64 train_size = -1;       // -1: scale * full size (100,000 / 10,000 / 10,000)
    i64 val_size = -1;
    i64 test_size = -1;
    i64 render_size = 256;     // high-res canvas, then box-downsampled
    i64 image_size = 32;

    i64 n_classes() const { return kind == DatasetKind::Letters5 ? 26 : 10; }
    i64 resolved_train() const { return train_size >= 0 ? train_size : static_cast<i64>(100000 * scale + 0.5); }
    i64 resolved_val() const { return val_size >= 0 ? val_size : static_cast<i64>(10000 * scale + 0.5); }
    i64 resolved_test() const { return test_size >= 0 ? test_size : static_cast<i64>(10000 * scale + 0.5); }
    void validate() const;
};

struct Dataset {
    i64 h = 0;
    i64 w = 0;
    i64 n_classes = 0;
    std::vector<Image> images;
    std::vector<u64> labels;
    std::vector<u64> seeds;

    i64 size() const { return static_cast<i64>(images.size()); }
};

/// Split index: 0 = train, 1 = val, 2 = test. Sample i's randomness
/// derives from (config seed, split, i), so generation order is free.
Dataset generate_split(const DatasetConfig& cfg, int split, i64 count);

std::string dataset_to_bytes(const Dataset& ds);
Dataset dataset_from_bytes(const std::string& bytes);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Per-pixel normalization statistics over a training split.
struct NormStats {
    i64 h = 0;
    i64 w = 0;
    std::vector<double> mean;
    std::vector<double> std_dev;  // population, floored at kStdFloor
    i64 count = 0;                // samples used; not persisted
};

inline constexpr double kStdFloor = 1e-6;

NormStats compute_norm_stats(const std::vector<Image>& train_images);
std::string norm_stats_to_bytes(const NormStats& stats);
NormStats norm_stats_from_bytes(const std::string& bytes);
void save_norm_stats(const NormStats& stats, const std::string& path);
NormStats load_norm_stats(const std::string& path);

/// (x - mean) / std per pixel, into out[h*w].
void normalize_into(const Image& img, const NormStats& stats, double* out);
Tensor normalize(const Image& img, const NormStats& stats);  // [1,1,H,W]

/// i.i.d. N(0, sigma^2) added per pixel in the normalized domain;
/// sigma = 0 is a bit-exact identity.
void add_gaussian_noise(double* img, i64 n, double sigma, u64 key);

/// Keep each pixel with probability snr, else set it to 0 or 255 with
/// equal probability. Applied in the raw 8-bit domain.
void add_salt_pepper(Image& img, double snr, u64 key);

}  // namespace hbnet
