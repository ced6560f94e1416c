#pragma once

// Portable float map (PFM) reader/writer.
//
// Layout: "Pf" (1 channel) or "PF" (3 channels, interleaved RGB), then width,
// height and a scale whose sign gives the payload byte order (negative =
// little-endian). Rows are stored bottom-to-top as 32-bit floats.

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "pano/errors.hpp"
#include "pano/losses.hpp"
#include "pano/tensor.hpp"

namespace pano::io {

struct PfmImage {
    int channels = 1;
    int width = 0;
    int height = 0;
    double scale = -1.0;            // |scale| is carried through; sign is the byte order
    std::vector<float> pixels;      // top row first, channels interleaved
    std::vector<unsigned char> payload;  // raw payload bytes as found on disk (empty when built in memory)

    bool little_endian() const noexcept { return scale < 0.0; }
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline bool is_space(unsigned char c) noexcept { return std::isspace(c) != 0; }

struct HeaderCursor {
    std::span<const unsigned char> bytes;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    }

    std::string token(const char* what) {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && !is_space(bytes[pos])) ++pos;
        if (start == pos) throw FormatError(std::string("PFM: missing ") + what, start);
        return std::string(bytes.begin() + start, bytes.begin() + pos);
    }
};

inline int parse_dimension(const std::string& text, std::size_t offset, const char* what) {
    int value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || value <= 0) {
        throw FormatError(std::string("PFM: bad ") + what + " '" + text + "'", offset);
    }
    return value;
}

inline std::uint32_t load_u32(const unsigned char* p, bool little) noexcept {
    if (little) return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
    return std::uint32_t(p[3]) | std::uint32_t(p[2]) << 8 | std::uint32_t(p[1]) << 16 | std::uint32_t(p[0]) << 24;
}

inline void store_u32(unsigned char* p, std::uint32_t v, bool little) noexcept {
    for (int i = 0; i < 4; ++i) {
        const unsigned char b = static_cast<unsigned char>(v >> (8 * i));
        p[little ? i : 3 - i] = b;
    }
}

inline std::string format_scale(double scale) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), scale);
    std::string s(buf, end);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

}  // namespace detail

inline PfmImage parse_pfm(std::span<const unsigned char> bytes) {
    detail::HeaderCursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != 'f' && bytes[1] != 'F')) {
        throw FormatError("PFM: expected 'Pf' or 'PF' magic", 0);
    }
    PfmImage img;
    img.channels = bytes[1] == 'F' ? 3 : 1;
    cur.pos = 2;
    if (cur.pos >= bytes.size() || !detail::is_space(bytes[cur.pos])) {
        throw FormatError("PFM: expected whitespace after magic", cur.pos);
    }

    cur.skip_space();
    std::size_t at = cur.pos;
    img.width = detail::parse_dimension(cur.token("width"), at, "width");
    cur.skip_space();
    at = cur.pos;
    img.height = detail::parse_dimension(cur.token("height"), at, "height");
    cur.skip_space();
    at = cur.pos;
    const std::string scale_text = cur.token("scale");
    {
        double scale = 0.0;
        auto [end, ec] = std::from_chars(scale_text.data(), scale_text.data() + scale_text.size(), scale);
        if (ec != std::errc() || end != scale_text.data() + scale_text.size() || scale == 0.0 || !std::isfinite(scale)) {
            throw FormatError("PFM: bad scale '" + scale_text + "'", at);
        }
        img.scale = scale;
    }
    // Exactly one whitespace byte separates the header from the payload.
    if (cur.pos >= bytes.size() || !detail::is_space(bytes[cur.pos])) {
        throw FormatError("PFM: header not terminated", cur.pos);
    }
    const std::size_t start = cur.pos + 1;

    const std::size_t count = static_cast<std::size_t>(img.channels) * img.width * img.height;
    const std::size_t expected = count * 4;
    const std::size_t available = bytes.size() - start;
    if (available < expected) {
        throw FormatError("PFM: truncated payload, need " + std::to_string(expected) + " bytes, have " +
                              std::to_string(available),
                          bytes.size());
    }
    if (available > expected) throw FormatError("PFM: trailing bytes after payload", start + expected);

    img.payload.assign(bytes.begin() + start, bytes.end());
    img.pixels.resize(count);
    const bool little = img.little_endian();
    const std::size_t row_values = static_cast<std::size_t>(img.channels) * img.width;
    for (int file_row = 0; file_row < img.height; ++file_row) {
        const int image_row = img.height - 1 - file_row;
        for (std::size_t k = 0; k < row_values; ++k) {
            const unsigned char* p = img.payload.data() + (static_cast<std::size_t>(file_row) * row_values + k) * 4;
            img.pixels[static_cast<std::size_t>(image_row) * row_values + k] =
                std::bit_cast<float>(detail::load_u32(p, little));
        }
    }
    return img;
}

inline std::vector<unsigned char> serialize_pfm(const PfmImage& img) {
    if (img.channels != 1 && img.channels != 3) throw ShapeError("PFM: only 1 or 3 channels can be stored");
    const std::size_t row_values = static_cast<std::size_t>(img.channels) * img.width;
    if (img.pixels.size() != row_values * img.height) throw ShapeError("PFM: pixel count does not match dims");
    if (img.scale == 0.0 || !std::isfinite(img.scale)) throw DomainError("PFM: scale must be finite and nonzero");

    const std::string header = std::string(img.channels == 3 ? "PF" : "Pf") + "\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n" + detail::format_scale(img.scale) + "\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    const std::size_t start = out.size();
    out.resize(start + img.pixels.size() * 4);
    const bool little = img.little_endian();
    for (int file_row = 0; file_row < img.height; ++file_row) {
        const int image_row = img.height - 1 - file_row;
        for (std::size_t k = 0; k < row_values; ++k) {
            const float v = img.pixels[static_cast<std::size_t>(image_row) * row_values + k];
            detail::store_u32(out.data() + start + (static_cast<std::size_t>(file_row) * row_values + k) * 4,
                              std::bit_cast<std::uint32_t>(v), little);
        }
    }
    return out;
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline PfmImage read_pfm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_pfm(bytes);
}

inline void write_pfm(const std::filesystem::path& path, const PfmImage& img) { write_file(path, serialize_pfm(img)); }

// Tensor conversions. Floats widen to double exactly; doubles narrow to the
// nearest float on the way out.

inline ErpTensor to_tensor(const PfmImage& img) {
    const GridShape shape{img.height, img.width};
    std::vector<double> data(img.pixels.size());
    const std::size_t plane = static_cast<std::size_t>(shape.area());
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < img.channels; ++c) data[c * plane + p] = img.pixels[p * img.channels + c];
    return ErpTensor(img.channels, shape, std::move(data));
}

inline PfmImage from_tensor(const ErpTensor& t, double scale = -1.0) {
    if (t.channels() != 1 && t.channels() != 3) {
        throw ShapeError("PFM: cannot store a " + std::to_string(t.channels()) + "-channel tensor");
    }
    PfmImage img;
    img.channels = t.channels();
    img.width = t.width();
    img.height = t.height();
    img.scale = scale;
    const std::size_t plane = static_cast<std::size_t>(t.shape().area());
    img.pixels.resize(plane * img.channels);
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < img.channels; ++c) img.pixels[p * img.channels + c] = static_cast<float>(t.channel(c)[p]);
    return img;
}

/// Loads a single-channel PFM as a depth map; 3-channel files are rejected.
inline DepthMap to_depth_map(const PfmImage& img) {
    if (img.channels != 1) throw FormatError("PFM: expected a 1-channel 'Pf' depth map, found 'PF'", 0);
    return pano::to_depth_map(to_tensor(img));
}

inline PfmImage from_depth_map(const DepthMap& d, double scale = -1.0) { return from_tensor(pano::to_tensor(d), scale); }

}  // namespace pano::io
