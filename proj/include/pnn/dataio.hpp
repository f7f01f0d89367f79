#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pnn/errors.hpp"
#include "pnn/linalg.hpp"

namespace pnn {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;  // 784
inline constexpr int kDigitClasses = 10;

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// One handwritten-digit example: 784 pixels in [0,1] and its digit label.
struct Example {
    Vector pixels;
    int label = 0;
};

struct Dataset {
    std::vector<Example> train;
    std::vector<Example> eval;
};

namespace detail {

/// Reads a whole file through zlib. gzread detects the gzip magic bytes and
/// otherwise passes the raw bytes through, so plain and gzipped IDX files
/// take the same path.
inline std::vector<std::uint8_t> read_file_maybe_gz(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError(detail::msg("cannot open ", path, ": no such file"));
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw IoError(detail::msg("cannot open ", path));
    std::vector<std::uint8_t> bytes;
    std::uint8_t buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    if (n < 0) {
        int err = 0;
        std::string why = gzerror(f, &err);
        gzclose(f);
        throw FormatError(detail::msg("error decompressing ", path, ": ", why));
    }
    gzclose(f);
    return bytes;
}

/// Big-endian cursor over a byte buffer; failures name the byte offset.
class IdxReader {
public:
    IdxReader(const std::vector<std::uint8_t>& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    std::uint32_t be32(const char* field) {
        require(4, field);
        const std::uint32_t v = (std::uint32_t{bytes_[off_]} << 24) |
                                (std::uint32_t{bytes_[off_ + 1]} << 16) |
                                (std::uint32_t{bytes_[off_ + 2]} << 8) |
                                std::uint32_t{bytes_[off_ + 3]};
        off_ += 4;
        return v;
    }

    const std::uint8_t* take(std::size_t n, const char* field) {
        require(n, field);
        const std::uint8_t* p = bytes_.data() + off_;
        off_ += n;
        return p;
    }

    std::size_t offset() const { return off_; }

    void expect_end() const {
        if (off_ != bytes_.size())
            throw FormatError(detail::msg(path_, ": ", bytes_.size() - off_,
                                          " trailing bytes at offset ", off_));
    }

private:
    void require(std::size_t n, const char* field) const {
        if (off_ + n > bytes_.size())
            throw FormatError(detail::msg(path_, ": truncated while reading ", field,
                                          " at offset ", off_, " (file has ", bytes_.size(),
                                          " bytes)"));
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string path_;
    std::size_t off_ = 0;
};

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

/// Writes bytes to path; a ".gz" suffix selects gzip compression.
inline void write_file_maybe_gz(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    if (path.size() > 3 && path.substr(path.size() - 3) == ".gz") {
        gzFile f = gzopen(path.c_str(), "wb");
        if (f == nullptr) throw IoError(detail::msg("cannot open ", path, " for writing"));
        if (gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) !=
            static_cast<int>(bytes.size())) {
            gzclose(f);
            throw IoError(detail::msg("short write to ", path));
        }
        gzclose(f);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path, " for writing"));
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError(detail::msg("short write to ", path));
}

}  // namespace detail

/// Loads an IDX image file (magic 0x00000803, 28x28) into 784-vectors with
/// pixels scaled to [0,1] by division by 255.
inline std::vector<Vector> load_idx_images(const std::string& path) {
    const auto bytes = detail::read_file_maybe_gz(path);
    detail::IdxReader r(bytes, path);
    const std::uint32_t magic = r.be32("magic");
    if (magic != kIdxImagesMagic)
        throw FormatError(detail::msg(path, ": bad image magic 0x", std::hex, magic,
                                      " at offset 0, expected 0x803"));
    const std::uint32_t count = r.be32("image count");
    const std::uint32_t rows = r.be32("row count");
    const std::uint32_t cols = r.be32("column count");
    if (rows != kImageSide || cols != kImageSide)
        throw FormatError(detail::msg(path, ": image dimensions ", rows, "x", cols,
                                      " at offset 8, expected 28x28"));
    std::vector<Vector> images;
    images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint8_t* px = r.take(kImagePixels, "image pixels");
        Vector v(kImagePixels);
        for (std::size_t j = 0; j < kImagePixels; ++j) v.data[j] = px[j] / 255.0;
        images.push_back(std::move(v));
    }
    r.expect_end();
    return images;
}

/// Loads an IDX label file (magic 0x00000801) into digits 0-9.
inline std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = detail::read_file_maybe_gz(path);
    detail::IdxReader r(bytes, path);
    const std::uint32_t magic = r.be32("magic");
    if (magic != kIdxLabelsMagic)
        throw FormatError(detail::msg(path, ": bad label magic 0x", std::hex, magic,
                                      " at offset 0, expected 0x801"));
    const std::uint32_t count = r.be32("label count");
    std::vector<int> labels;
    labels.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const std::uint8_t b = *r.take(1, "label");
        if (b > 9)
            throw FormatError(detail::msg(path, ": label ", int(b), " out of range 0-9 at offset ", at));
        labels.push_back(b);
    }
    r.expect_end();
    return labels;
}

/// Writes 28x28 byte images as an IDX file; ".gz" paths are compressed.
inline void write_idx_images(const std::string& path,
                             const std::vector<std::vector<std::uint8_t>>& images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.size() * kImagePixels);
    detail::write_be32(out, kIdxImagesMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(images.size()));
    detail::write_be32(out, kImageSide);
    detail::write_be32(out, kImageSide);
    for (const auto& img : images) {
        if (img.size() != kImagePixels)
            throw DimensionError(detail::msg("write_idx_images: image has ", img.size(),
                                             " pixels, expected ", kImagePixels));
        out.insert(out.end(), img.begin(), img.end());
    }
    detail::write_file_maybe_gz(path, out);
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    detail::write_be32(out, kIdxLabelsMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int label : labels) {
        if (label < 0 || label > 9)
            throw ConfigError(detail::msg("write_idx_labels: label ", label, " out of range 0-9"));
        out.push_back(static_cast<std::uint8_t>(label));
    }
    detail::write_file_maybe_gz(path, out);
}

/// Zips images with labels into a Dataset. train_cap truncates the training
/// list to its first train_cap examples before any shuffling.
inline Dataset make_dataset(std::vector<Vector> train_images, std::vector<int> train_labels,
                            std::vector<Vector> eval_images, std::vector<int> eval_labels,
                            std::optional<std::size_t> train_cap = std::nullopt) {
    if (train_images.size() != train_labels.size())
        throw DimensionError(detail::msg("make_dataset: ", train_images.size(),
                                         " training images vs ", train_labels.size(), " labels"));
    if (eval_images.size() != eval_labels.size())
        throw DimensionError(detail::msg("make_dataset: ", eval_images.size(),
                                         " evaluation images vs ", eval_labels.size(), " labels"));
    Dataset ds;
    std::size_t n_train = train_images.size();
    if (train_cap.has_value() && *train_cap < n_train) n_train = *train_cap;
    ds.train.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i)
        ds.train.push_back(Example{std::move(train_images[i]), train_labels[i]});
    ds.eval.reserve(eval_images.size());
    for (std::size_t i = 0; i < eval_images.size(); ++i)
        ds.eval.push_back(Example{std::move(eval_images[i]), eval_labels[i]});
    return ds;
}

/// Basis vector of length 10 with 1.0 at the label index.
inline Vector one_hot(int label) {
    if (label < 0 || label >= kDigitClasses)
        throw ConfigError(detail::msg("one_hot: label ", label, " out of range 0-9"));
    Vector v(kDigitClasses);
    v.data[static_cast<std::size_t>(label)] = 1.0;
    return v;
}

/// Resolves `base` or `base.gz` under dir.
inline std::string find_idx_file(const std::string& dir, const std::string& base) {
    namespace fs = std::filesystem;
    const fs::path raw = fs::path(dir) / base;
    if (fs::exists(raw)) return raw.string();
    const fs::path gz = fs::path(dir) / (base + ".gz");
    if (fs::exists(gz)) return gz.string();
    throw IoError(detail::msg("no ", base, "[.gz] under ", dir));
}

/// Loads the standard four-file layout from a directory. train_size keeps the
/// first train_size training examples (0 = all); train_cap then truncates
/// further for desk-scale runs.
inline Dataset load_dataset_dir(const std::string& dir, std::size_t train_size = 0,
                                std::optional<std::size_t> train_cap = std::nullopt) {
    auto train_images = load_idx_images(find_idx_file(dir, "train-images-idx3-ubyte"));
    auto train_labels = load_idx_labels(find_idx_file(dir, "train-labels-idx1-ubyte"));
    auto eval_images = load_idx_images(find_idx_file(dir, "t10k-images-idx3-ubyte"));
    auto eval_labels = load_idx_labels(find_idx_file(dir, "t10k-labels-idx1-ubyte"));
    std::optional<std::size_t> cap = train_cap;
    if (train_size > 0 && (!cap.has_value() || train_size < *cap)) cap = train_size;
    return make_dataset(std::move(train_images), std::move(train_labels), std::move(eval_images),
                        std::move(eval_labels), cap);
}

}  // namespace pnn
