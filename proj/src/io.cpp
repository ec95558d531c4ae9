#include "wico/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wico {

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor file writer assumes a little-endian host");

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + 4);
}

std::uint32_t pull_u32(const std::vector<std::uint8_t>& in, std::size_t& off) {
    if (off + 4 > in.size()) throw IoError("tensor file: truncated header");
    std::uint32_t v;
    std::memcpy(&v, in.data() + off, 4);
    off += 4;
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'W', 'I', 'C', 'O'});
    push_u32(out, 1);
    push_u32(out, t.dtype() == DType::f32 ? 1 : 2);
    push_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) push_u32(out, static_cast<std::uint32_t>(e));
    if (t.dtype() == DType::f32) {
        for (double v : t.data()) {
            const float f = static_cast<float>(v);
            const auto* p = reinterpret_cast<const std::uint8_t*>(&f);
            out.insert(out.end(), p, p + 4);
        }
    } else {
        for (double v : t.data()) {
            const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
            out.insert(out.end(), p, p + 8);
        }
    }
    return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "WICO", 4) != 0) {
        throw IoError("tensor file: bad magic");
    }
    std::size_t off = 4;
    const std::uint32_t version = pull_u32(bytes, off);
    if (version != 1) {
        throw IoError("tensor file: unsupported version " + std::to_string(version));
    }
    const std::uint32_t dtype_code = pull_u32(bytes, off);
    if (dtype_code != 1 && dtype_code != 2) {
        throw IoError("tensor file: unknown dtype code " + std::to_string(dtype_code));
    }
    const DType dtype = dtype_code == 1 ? DType::f32 : DType::f64;
    const std::uint32_t ndim = pull_u32(bytes, off);
    std::vector<std::size_t> shape(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) shape[i] = pull_u32(bytes, off);

    const std::size_t count = shape_product(shape);
    const std::size_t elem = dtype_size(dtype);
    if (bytes.size() - off != count * elem) {
        throw IoError("tensor file: payload is " + std::to_string(bytes.size() - off) +
                      " bytes, expected " + std::to_string(count * elem));
    }
    Tensor t(shape, dtype);
    for (std::size_t i = 0; i < count; ++i) {
        if (dtype == DType::f32) {
            float f;
            std::memcpy(&f, bytes.data() + off + i * 4, 4);
            t[i] = static_cast<double>(f);
        } else {
            std::memcpy(&t[i], bytes.data() + off + i * 8, 8);
        }
    }
    return t;
}

void write_tensor(const std::string& path, const Tensor& t) {
    const std::vector<std::uint8_t> bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

Tensor read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string csv_format(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    auto emit_row = [&os](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << csv_escape(row[i]);
        }
        os << "\r\n";
    };
    emit_row(header);
    for (const auto& row : rows) emit_row(row);
    return os.str();
}

void write_heatmap_pgm(const std::string& path, const Tensor& map2d) {
    if (map2d.rank() != 2 || map2d.size() == 0) {
        throw InputError("heatmap: expected a non-empty rank-2 map");
    }
    double lo = map2d[0], hi = map2d[0];
    for (double v : map2d.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<std::uint8_t> pixels(map2d.size());
    if (hi == lo) {
        std::fill(pixels.begin(), pixels.end(), std::uint8_t{128});
    } else {
        for (std::size_t i = 0; i < map2d.size(); ++i) {
            pixels[i] = static_cast<std::uint8_t>(
                std::lround((map2d[i] - lo) / (hi - lo) * 255.0));
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << map2d.extent(1) << ' ' << map2d.extent(0) << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace wico
