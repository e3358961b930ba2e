#include "defocuskit/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "defocuskit/errors.hpp"

namespace dk {

namespace {

// Next whitespace-separated token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw IoError("pnm: truncated header");
    return tok;
}

int next_int(std::istream& in) { return std::stoi(next_token(in)); }

struct PnmHeader {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& path) {
    PnmHeader h;
    h.magic = next_token(in);
    if (h.magic != "P2" && h.magic != "P5" && h.magic != "P6")
        throw IoError("pnm: unsupported magic '" + h.magic + "' in " + path);
    h.width = next_int(in);
    h.height = next_int(in);
    h.maxval = next_int(in);
    if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535)
        throw IoError("pnm: bad dimensions/maxval in " + path);
    return h;
}

std::vector<double> read_samples(std::istream& in, const PnmHeader& h, std::size_t count, const std::string& path) {
    std::vector<double> samples(count);
    const double inv = 1.0 / h.maxval;
    if (h.magic == "P2") {
        for (std::size_t i = 0; i < count; ++i) samples[i] = next_int(in) * inv;
        return samples;
    }
    const int bytes = h.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw IoError("pnm: truncated pixel data in " + path);
    if (bytes == 1) {
        for (std::size_t i = 0; i < count; ++i) samples[i] = raw[i] * inv;
    } else {
        for (std::size_t i = 0; i < count; ++i)
            samples[i] = (raw[2 * i] * 256 + raw[2 * i + 1]) * inv;  // big-endian per the format
    }
    return samples;
}

}  // namespace

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const PnmHeader h = read_header(in, path);
    if (h.magic == "P6") throw IoError("load_pgm: " + path + " is color (use load_image_channels)");
    Image im(h.height, h.width);
    im.data = read_samples(in, h, im.size(), path);
    return im;
}

void save_pgm(const Image& image, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("save_pgm: bit_depth must be 8 or 16");
    if (image.height < 1 || image.width < 1) throw std::invalid_argument("save_pgm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    const int maxval = bit_depth == 8 ? 255 : 65535;
    out << "P5\n" << image.width << " " << image.height << "\n" << maxval << "\n";
    std::vector<unsigned char> raw;
    raw.reserve(image.size() * (bit_depth / 8));
    for (double v : image.data) {
        // round-half-up quantization
        const long q = std::clamp(static_cast<long>(std::floor(v * maxval + 0.5)), 0L, static_cast<long>(maxval));
        if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
        raw.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("short write to " + path);
}

std::vector<Image> load_image_channels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const PnmHeader h = read_header(in, path);
    const int channels = h.magic == "P6" ? 3 : 1;
    const std::size_t pixels = static_cast<std::size_t>(h.width) * h.height;
    const std::vector<double> samples = read_samples(in, h, pixels * channels, path);
    std::vector<Image> out(channels, Image(h.height, h.width));
    for (std::size_t i = 0; i < pixels; ++i)
        for (int ch = 0; ch < channels; ++ch) out[ch].data[i] = samples[i * channels + ch];
    return out;
}

void save_image_channels(const std::vector<Image>& channels, const std::string& path, int bit_depth) {
    if (channels.size() == 1) {
        save_pgm(channels[0], path, bit_depth);
        return;
    }
    if (channels.size() != 3) throw std::invalid_argument("save_image_channels: expected 1 or 3 channels");
    for (const Image& ch : channels)
        if (!ch.same_shape(channels[0])) throw std::invalid_argument("save_image_channels: channel shape mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << channels[0].width << " " << channels[0].height << "\n255\n";
    std::vector<unsigned char> raw;
    raw.reserve(channels[0].size() * 3);
    for (std::size_t i = 0; i < channels[0].size(); ++i)
        for (int ch = 0; ch < 3; ++ch) {
            const long q = std::clamp(static_cast<long>(std::floor(channels[ch].data[i] * 255.0 + 0.5)), 0L, 255L);
            raw.push_back(static_cast<unsigned char>(q));
        }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("short write to " + path);
}

}  // namespace dk
