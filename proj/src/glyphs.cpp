#include <array>

#include "hbnet/datagen.hpp"

namespace hbnet {

namespace {

// 5x7 dot-matrix font, one row per byte, bit 4 = leftmost column.
struct FontEntry {
    char symbol;
    std::array<u8, 7> rows;
};

constexpr FontEntry kFont[] = {
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b11111, 0b00001, 0b00010, 0b00110, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'D', {0b11110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11110}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
    {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    {'N', {0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001, 0b10001}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
    {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
    {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
    {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b11011, 0b10001}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
    {'Y', {0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
};

const FontEntry& font_entry(char c) {
    for (const auto& e : kFont)
        if (e.symbol == c) return e;
    throw InternalError(std::string("no font entry for '") + c + "'");
}

Glyph build_glyph(char symbol, i64 scale, i64 r) {
    const auto& entry = font_entry(symbol);
    const i64 ink_w = 5 * scale, ink_h = 7 * scale;
    Glyph g;
    g.symbol = symbol;
    g.w = ink_w + 2 * r;
    g.h = ink_h + 2 * r;
    g.ink.assign(static_cast<size_t>(g.w * g.h), 0);
    g.outline.assign(static_cast<size_t>(g.w * g.h), 0);

    for (i64 fy = 0; fy < 7; ++fy)
        for (i64 fx = 0; fx < 5; ++fx) {
            if ((entry.rows[static_cast<size_t>(fy)] >> (4 - fx) & 1) == 0) continue;
            for (i64 dy = 0; dy < scale; ++dy)
                for (i64 dx = 0; dx < scale; ++dx)
                    g.ink[static_cast<size_t>((r + fy * scale + dy) * g.w + (r + fx * scale + dx))] = 1;
        }

    // outline = Chebyshev dilation of the ink by r, minus the ink;
    // separable two-pass dilation
    std::vector<u8> horiz(g.ink.size(), 0);
    for (i64 y = 0; y < g.h; ++y)
        for (i64 x = 0; x < g.w; ++x) {
            u8 hit = 0;
            for (i64 d = -r; d <= r && !hit; ++d) {
                const i64 xx = x + d;
                if (xx >= 0 && xx < g.w && g.ink[static_cast<size_t>(y * g.w + xx)]) hit = 1;
            }
            horiz[static_cast<size_t>(y * g.w + x)] = hit;
        }
    for (i64 y = 0; y < g.h; ++y)
        for (i64 x = 0; x < g.w; ++x) {
            u8 hit = 0;
            for (i64 d = -r; d <= r && !hit; ++d) {
                const i64 yy = y + d;
                if (yy >= 0 && yy < g.h && horiz[static_cast<size_t>(yy * g.w + x)]) hit = 1;
            }
            if (hit && !g.ink[static_cast<size_t>(y * g.w + x)])
                g.outline[static_cast<size_t>(y * g.w + x)] = 1;
        }
    return g;
}

}  // namespace

GlyphSet::GlyphSet(std::string charset, i64 scale, i64 outline_radius) : charset_(std::move(charset)) {
    check(scale >= 1, "GlyphSet: scale must be >= 1");
    check(outline_radius >= 1, "GlyphSet: outline radius must be >= 1");
    glyphs_.reserve(charset_.size());
    for (char c : charset_) glyphs_.push_back(build_glyph(c, scale, outline_radius));
}

GlyphSet GlyphSet::digits(i64 scale, i64 outline_radius) {
    return GlyphSet("0123456789", scale, outline_radius);
}

GlyphSet GlyphSet::letters(i64 scale, i64 outline_radius) {
    return GlyphSet("ABCDEFGHIJKLMNOPQRSTUVWXYZ", scale, outline_radius);
}

}  // namespace hbnet
