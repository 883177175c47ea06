#include "abp/codec.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "abp/errors.hpp"

namespace abp {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to '" + path + "'");
}

namespace {

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    bool eof() const { return pos >= bytes.size(); }
    std::uint8_t peek() const { return bytes[pos]; }
    std::uint8_t next() { return bytes[pos++]; }
};

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Skips whitespace and '#' comments in a PNM header.
void skip_header_space(ByteReader& r) {
    while (!r.eof()) {
        if (is_space(r.peek())) {
            r.next();
        } else if (r.peek() == '#') {
            while (!r.eof() && r.next() != '\n') {
            }
        } else {
            return;
        }
    }
}

int parse_header_int(ByteReader& r, const char* what) {
    skip_header_space(r);
    if (r.eof() || r.peek() < '0' || r.peek() > '9') {
        throw FormatError(std::string("pnm: bad ") + what);
    }
    long v = 0;
    while (!r.eof() && r.peek() >= '0' && r.peek() <= '9') {
        v = v * 10 + (r.next() - '0');
        if (v > 1 << 30) throw FormatError(std::string("pnm: oversized ") + what);
    }
    return static_cast<int>(v);
}

double byte_to_unit(std::uint8_t b) { return static_cast<double>(b) / 127.5 - 1.0; }

std::uint8_t unit_to_byte(double v) {
    const double scaled = std::round((v + 1.0) * 127.5);
    if (scaled <= 0.0) return 0;
    if (scaled >= 255.0) return 255;
    return static_cast<std::uint8_t>(scaled);
}

}  // namespace

Tensor decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("pnm: bad magic");
    const char type = static_cast<char>(bytes[1]);
    if (type != '5' && type != '6') {
        throw FormatError("pnm: only binary P5/P6 supported, got P" + std::string(1, type));
    }
    ByteReader r{bytes, 2};
    const int w = parse_header_int(r, "width");
    const int h = parse_header_int(r, "height");
    const int maxval = parse_header_int(r, "maxval");
    if (w < 1 || h < 1) throw FormatError("pnm: bad dimensions");
    if (maxval < 1 || maxval > 255) throw FormatError("pnm: only 8-bit depth supported");
    if (r.eof() || !is_space(r.peek())) throw FormatError("pnm: missing header terminator");
    r.next();

    const int channels = type == '6' ? 3 : 1;
    const std::size_t need = static_cast<std::size_t>(channels) * h * w;
    if (bytes.size() - r.pos < need) throw FormatError("pnm: truncated pixel data");

    Tensor img({channels, h, w});
    const std::uint8_t* px = bytes.data() + r.pos;
    if (channels == 1) {
        for (std::size_t i = 0; i < need; ++i) img[static_cast<std::int64_t>(i)] = byte_to_unit(px[i]);
    } else {
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (std::size_t i = 0; i < plane; ++i) {
            img.data[i] = byte_to_unit(px[3 * i]);
            img.data[plane + i] = byte_to_unit(px[3 * i + 1]);
            img.data[2 * plane + i] = byte_to_unit(px[3 * i + 2]);
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_image(const Tensor& image) {
    if (image.rank() != 3 || (image.shape[0] != 1 && image.shape[0] != 3)) {
        throw ShapeError("encode_image: expected [1,H,W] or [3,H,W], got " +
                         shape_string(image.shape));
    }
    const int channels = image.shape[0], h = image.shape[1], w = image.shape[2];
    std::string header = (channels == 3 ? "P6\n" : "P5\n") + std::to_string(w) + " " +
                         std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    out.reserve(out.size() + plane * channels);
    if (channels == 1) {
        for (std::size_t i = 0; i < plane; ++i) out.push_back(unit_to_byte(image.data[i]));
    } else {
        for (std::size_t i = 0; i < plane; ++i) {
            out.push_back(unit_to_byte(image.data[i]));
            out.push_back(unit_to_byte(image.data[plane + i]));
            out.push_back(unit_to_byte(image.data[2 * plane + i]));
        }
    }
    return out;
}

Tensor load_image(const std::string& path) { return decode_image(read_file(path)); }

void save_image(const std::string& path, const Tensor& image) {
    const auto bytes = encode_image(image);
    write_file(path, bytes);
}

Tensor decode_mask(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        throw FormatError("mask: expected graymap, got pixmap");
    }
    Tensor img = decode_image(bytes);
    Tensor mask = img;
    for (std::int64_t i = 0; i < img.size(); ++i) {
        if (img[i] == -1.0) {
            mask[i] = 0.0;
        } else if (img[i] == 1.0) {
            mask[i] = 1.0;
        } else {
            throw FormatError("mask: pixels must be 0 (occluded) or 255 (observed)");
        }
    }
    return mask;
}

std::vector<std::uint8_t> encode_mask(const Tensor& mask) {
    Tensor img = mask.rank() == 3 ? mask : Tensor::from({1, 1, static_cast<int>(mask.size())},
                                                        mask.data);
    for (std::int64_t i = 0; i < img.size(); ++i) {
        if (img[i] != 0.0 && img[i] != 1.0) throw ShapeError("mask entries must be 0 or 1");
        img[i] = img[i] == 0.0 ? -1.0 : 1.0;
    }
    if (img.shape[0] != 1) {
        // One spatial mask shared across channels; store the first plane.
        Tensor plane({1, img.shape[1], img.shape[2]});
        for (std::int64_t i = 0; i < plane.size(); ++i) plane[i] = img[i];
        img = std::move(plane);
    }
    return encode_image(img);
}

Tensor load_mask(const std::string& path) { return decode_mask(read_file(path)); }

void save_mask(const std::string& path, const Tensor& mask) {
    const auto bytes = encode_mask(mask);
    write_file(path, bytes);
}

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t pos) {
    return static_cast<std::uint32_t>(b[pos]) | static_cast<std::uint32_t>(b[pos + 1]) << 8 |
           static_cast<std::uint32_t>(b[pos + 2]) << 16 |
           static_cast<std::uint32_t>(b[pos + 3]) << 24;
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t pos) {
    return static_cast<std::uint16_t>(b[pos] | b[pos + 1] << 8);
}

void push_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 24));
}

void push_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t pos, const char* tag) {
    return std::memcmp(b.data() + pos, tag, 4) == 0;
}

}  // namespace

Tensor decode_wav(std::span<const std::uint8_t> bytes, int* sample_rate) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
        throw FormatError("wav: bad RIFF header");
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    int rate = 0;
    std::vector<double> samples;
    bool have_data = false;

    while (pos + 8 <= bytes.size()) {
        const std::size_t chunk_size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) throw FormatError("wav: truncated chunk");
        if (tag_is(bytes, pos, "fmt ")) {
            if (chunk_size < 16) throw FormatError("wav: short fmt chunk");
            const int format = read_u16(bytes, body);
            const int channels = read_u16(bytes, body + 2);
            rate = static_cast<int>(read_u32(bytes, body + 4));
            const int bits = read_u16(bytes, body + 14);
            if (format != 1) throw FormatError("wav: compressed formats not supported");
            if (channels != 1) throw FormatError("wav: only mono supported");
            if (bits != 16) throw FormatError("wav: only 16-bit PCM supported");
            have_fmt = true;
        } else if (tag_is(bytes, pos, "data")) {
            if (!have_fmt) throw FormatError("wav: data chunk before fmt");
            const std::size_t n = chunk_size / 2;
            samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::int16_t s =
                    static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
                samples[i] = static_cast<double>(s) / 32768.0;
            }
            have_data = true;
        }
        pos = body + chunk_size + (chunk_size & 1);
    }
    if (!have_fmt || !have_data) throw FormatError("wav: missing fmt or data chunk");
    if (sample_rate) *sample_rate = rate;
    return Tensor::from({1, static_cast<int>(samples.size())}, std::move(samples));
}

std::vector<std::uint8_t> encode_wav(const Tensor& sound, int sample_rate) {
    if (sound.rank() != 2 || sound.shape[0] != 1) {
        throw ShapeError("encode_wav: expected [1,N], got " + shape_string(sound.shape));
    }
    const std::size_t n = static_cast<std::size_t>(sound.shape[1]);
    std::vector<std::uint8_t> out;
    out.reserve(44 + 2 * n);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(2 * n);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    push_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    push_u32(out, 16);
    push_u16(out, 1);  // PCM
    push_u16(out, 1);  // mono
    push_u32(out, static_cast<std::uint32_t>(sample_rate));
    push_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
    push_u16(out, 2);
    push_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    push_u32(out, data_bytes);
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::round(sound.data[i] * 32768.0);
        if (v > 32767.0) v = 32767.0;
        if (v < -32768.0) v = -32768.0;
        push_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    return out;
}

Tensor load_wav(const std::string& path, int* sample_rate) {
    return decode_wav(read_file(path), sample_rate);
}

void save_wav(const std::string& path, const Tensor& sound, int sample_rate) {
    const auto bytes = encode_wav(sound, sample_rate);
    write_file(path, bytes);
}

}  // namespace abp
