#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace layercomp {

// Image dataset with binary parity labels (odd digit -> 1). Pixels are
// stored as floats in [0, 1]; the raw digit labels are kept alongside.
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> pixels;     // n() x features(), row-major
    std::vector<std::uint8_t> labels;  // parity
    std::vector<std::uint8_t> digits;  // original 0..9

    std::size_t n() const { return labels.size(); }
    std::size_t features() const { return rows * cols; }
    std::span<const float> sample(std::size_t i) const {
        return std::span<const float>(pixels.data() + i * features(), features());
    }
    std::vector<double> sample_d(std::size_t i) const {
        const auto s = sample(i);
        return std::vector<double>(s.begin(), s.end());
    }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("truncated file: " + what);
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// Reads an IDX image/label pair (big-endian; magics 0x803 and 0x801).
// Pixels are scaled by 1/255; labels become digit parity.
inline Dataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open: " + labels_path);

    if (detail::read_be32(img, images_path) != 0x00000803u) {
        throw std::runtime_error("bad magic in image file: " + images_path);
    }
    const std::uint32_t n_img = detail::read_be32(img, images_path);
    const std::uint32_t rows = detail::read_be32(img, images_path);
    const std::uint32_t cols = detail::read_be32(img, images_path);

    if (detail::read_be32(lab, labels_path) != 0x00000801u) {
        throw std::runtime_error("bad magic in label file: " + labels_path);
    }
    const std::uint32_t n_lab = detail::read_be32(lab, labels_path);
    if (n_img != n_lab) {
        throw std::runtime_error("count mismatch: " + std::to_string(n_img) +
                                 " images vs " + std::to_string(n_lab) +
                                 " labels");
    }

    Dataset ds;
    ds.rows = rows;
    ds.cols = cols;
    const std::size_t total = std::size_t{n_img} * rows * cols;
    std::vector<unsigned char> raw(total);
    if (!img.read(reinterpret_cast<char*>(raw.data()),
                  static_cast<std::streamsize>(total))) {
        throw std::runtime_error("truncated file: " + images_path);
    }
    ds.pixels.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        ds.pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    ds.digits.resize(n_lab);
    if (!lab.read(reinterpret_cast<char*>(ds.digits.data()), n_lab)) {
        throw std::runtime_error("truncated file: " + labels_path);
    }
    ds.labels.resize(n_lab);
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        ds.labels[i] = ds.digits[i] % 2;  // odd -> 1
    }
    return ds;
}

// Writes the dataset back out as an IDX pair; pixels are rounded to bytes
// and the raw digit labels are stored.
inline void save_idx(const Dataset& ds, const std::string& images_path,
                     const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open for writing: " + images_path);
    detail::write_be32(img, 0x00000803u);
    detail::write_be32(img, static_cast<std::uint32_t>(ds.n()));
    detail::write_be32(img, static_cast<std::uint32_t>(ds.rows));
    detail::write_be32(img, static_cast<std::uint32_t>(ds.cols));
    std::vector<unsigned char> raw(ds.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = ds.pixels[i] * 255.0f;
        raw[i] = static_cast<unsigned char>(
            v <= 0.0f ? 0 : (v >= 255.0f ? 255 : static_cast<int>(v + 0.5f)));
    }
    img.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open for writing: " + labels_path);
    detail::write_be32(lab, 0x00000801u);
    detail::write_be32(lab, static_cast<std::uint32_t>(ds.n()));
    lab.write(reinterpret_cast<const char*>(ds.digits.data()),
              static_cast<std::streamsize>(ds.digits.size()));
}

}  // namespace layercomp
