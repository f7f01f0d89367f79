#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pnn/errors.hpp"
#include "pnn/network.hpp"

namespace pnn {

// Checkpoint format, version 1. All integers and floats little-endian.
//
//   "PNN1"                         4-byte magic
//   u8 version                     currently 1
//   u8 activation                  hidden kind + 3 * head kind
//                                  (0/1/2 = sigmoid/relu/tanh hidden with
//                                  the default sigmoid head)
//   u32 subnet_count
//   per sub-network: u32 arch_len, arch_len x u32 layer sizes
//   per sub-network: hidden layers in order (weight matrix row-major f64,
//                    bias vector f64), then the output block row-major f64
//   shared output bias f64
//   per sub-network: frozen output bias f64
//
// Round-trips are bit-exact; identical models produce identical bytes.

inline constexpr char kCheckpointMagic[4] = {'P', 'N', 'N', '1'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f64(double v) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    void f64_span(const std::vector<double>& values) {
        for (double v : values) f64(v);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class CheckpointReader {
public:
    CheckpointReader(std::vector<std::uint8_t> bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint8_t u8(const char* field) {
        require(1, field);
        return bytes_[off_++];
    }

    std::uint32_t u32(const char* field) {
        require(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[off_ + i]} << (8 * i);
        off_ += 4;
        return v;
    }

    double f64(const char* field) {
        require(8, field);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[off_ + i]} << (8 * i);
        off_ += 8;
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    void f64_fill(std::vector<double>& out, const char* field) {
        for (auto& v : out) v = f64(field);
    }

    std::size_t offset() const { return off_; }

    void expect_end() const {
        if (off_ != bytes_.size())
            throw FormatError(detail::msg(path_, ": ", bytes_.size() - off_,
                                          " trailing bytes at offset ", off_));
    }

    const std::string& path() const { return path_; }

private:
    void require(std::size_t n, const char* field) const {
        if (off_ + n > bytes_.size())
            throw FormatError(detail::msg(path_, ": truncated while reading ", field,
                                          " at offset ", off_));
    }

    std::vector<std::uint8_t> bytes_;
    std::string path_;
    std::size_t off_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const PnnModel& model, const std::string& path) {
    detail::ByteWriter w;
    for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(static_cast<int>(model.activation) +
                                   3 * static_cast<int>(model.head)));
    w.u32(static_cast<std::uint32_t>(model.subnet_count()));
    for (const auto& s : model.subnets) {
        w.u32(static_cast<std::uint32_t>(s.arch.size()));
        for (std::size_t n : s.arch) w.u32(static_cast<std::uint32_t>(n));
    }
    for (const auto& s : model.subnets) {
        for (std::size_t l = 0; l < s.hidden_weights.size(); ++l) {
            w.f64_span(s.hidden_weights[l].data);
            w.f64_span(s.hidden_biases[l].data);
        }
        w.f64_span(s.output_block.data);
    }
    w.f64_span(model.shared_output_bias.data);
    for (const auto& b : model.sub_output_biases) w.f64_span(b.data);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path, " for writing"));
    f.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
    if (!f) throw IoError(detail::msg("short write to ", path));
}

inline PnnModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(detail::msg("cannot open ", path));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    detail::CheckpointReader r(std::move(bytes), path);

    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8("magic"));
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError(detail::msg(path, ": bad checkpoint magic at offset 0"));
    const std::uint8_t version = r.u8("version");
    if (version != kCheckpointVersion)
        throw FormatError(detail::msg(path, ": unsupported checkpoint version ", int(version)));
    const std::uint8_t act = r.u8("activation");
    if (act >= 9)
        throw FormatError(detail::msg(path, ": bad activation code ", int(act)));

    PnnModel model;
    model.activation = static_cast<ActivationKind>(act % 3);
    model.head = static_cast<ActivationKind>(act / 3);
    const std::uint32_t subnet_count = r.u32("subnet count");
    if (subnet_count < 2)
        throw FormatError(detail::msg(path, ": sub-network count ", subnet_count, " below 2"));

    std::vector<std::vector<std::size_t>> archs;
    for (std::uint32_t i = 0; i < subnet_count; ++i) {
        const std::uint32_t len = r.u32("arch length");
        if (len < 3)
            throw FormatError(detail::msg(path, ": arch length ", len, " below 3 at offset ",
                                          r.offset() - 4));
        std::vector<std::size_t> arch;
        for (std::uint32_t j = 0; j < len; ++j) {
            const std::uint32_t n = r.u32("layer size");
            if (n == 0)
                throw FormatError(detail::msg(path, ": zero layer size at offset ",
                                              r.offset() - 4));
            arch.push_back(n);
        }
        archs.push_back(std::move(arch));
    }
    const std::size_t n0 = archs.front().front();
    const std::size_t nm = archs.front().back();
    for (const auto& arch : archs)
        if (arch.front() != n0 || arch.back() != nm)
            throw FormatError(detail::msg(path, ": sub-network input/output sizes disagree"));

    for (const auto& arch : archs) {
        SubnetStack s;
        s.arch = arch;
        const std::size_t m = arch.size() - 1;
        for (std::size_t l = 1; l < m; ++l) {
            Matrix w(arch[l], arch[l - 1]);
            r.f64_fill(w.data, "hidden weights");
            Vector b(arch[l]);
            r.f64_fill(b.data, "hidden biases");
            s.hidden_weights.push_back(std::move(w));
            s.hidden_biases.push_back(std::move(b));
        }
        s.output_block = Matrix(arch[m], arch[m - 1]);
        r.f64_fill(s.output_block.data, "output block");
        model.subnets.push_back(std::move(s));
    }
    model.shared_output_bias = Vector(nm);
    r.f64_fill(model.shared_output_bias.data, "shared output bias");
    for (std::uint32_t i = 0; i < subnet_count; ++i) {
        Vector b(nm);
        r.f64_fill(b.data, "frozen output bias");
        model.sub_output_biases.push_back(std::move(b));
    }
    r.expect_end();
    return model;
}

}  // namespace pnn
