#include "flowdepth/kitti_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <png.h>

namespace flowdepth {

namespace {

struct PngData {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> samples; // row-major, channel-interleaved
};

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f)
            std::fclose(f);
    }
};

PngData read_png(const std::string& path) {
    FileCloser file{std::fopen(path.c_str(), "rb")};
    if (!file.f)
        throw IoError("cannot open '" + path + "' for reading");

    png_byte header[8];
    if (std::fread(header, 1, 8, file.f) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw FormatError("'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("libpng failed to decode '" + path + "'");
    }
    png_init_io(png, file.f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    PngData out;
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    out.bit_depth = static_cast<int>(png_get_bit_depth(png, info));

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<png_byte> rows(row_bytes * out.height);
    std::vector<png_bytep> row_pointers(out.height);
    for (int y = 0; y < out.height; ++y)
        row_pointers[y] = rows.data() + row_bytes * y;
    png_read_image(png, row_pointers.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    out.samples.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < out.samples.size(); ++i)
            out.samples[i] = static_cast<std::uint16_t>((rows[2 * i] << 8) | rows[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < out.samples.size(); ++i)
            out.samples[i] = rows[i];
    }
    return out;
}

void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
               const std::uint16_t* samples) {
    if (channels != 1 && channels != 3)
        throw FormatError("PNG writer supports 1 or 3 channels");
    if (bit_depth != 8 && bit_depth != 16)
        throw FormatError("PNG writer supports bit depths 8 and 16");

    FileCloser file{std::fopen(path.c_str(), "wb")};
    if (!file.f)
        throw IoError("cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed to encode '" + path + "'");
    }
    png_init_io(png, file.f);
    png_set_IHDR(png, info, width, height, bit_depth,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    std::vector<png_byte> row(stride * (bit_depth == 16 ? 2 : 1));
    for (int y = 0; y < height; ++y) {
        const std::uint16_t* src = samples + stride * y;
        if (bit_depth == 16) {
            for (std::size_t i = 0; i < stride; ++i) {
                row[2 * i] = static_cast<png_byte>(src[i] >> 8);
                row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
            }
        } else {
            for (std::size_t i = 0; i < stride; ++i)
                row[i] = static_cast<png_byte>(src[i] & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint16_t quantize(double value, double lo, double hi) {
    return static_cast<std::uint16_t>(std::clamp(std::floor(value + 0.5), lo, hi));
}

} // namespace

DepthMap read_depth_png(const std::string& path) {
    const PngData png = read_png(path);
    if (png.bit_depth != 16 || png.channels != 1)
        throw FormatError("'" + path + "': depth maps must be 16-bit single-channel, got " +
                          std::to_string(png.bit_depth) + "-bit " + std::to_string(png.channels) +
                          "-channel");
    DepthMap out(png.height, png.width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint16_t stored = png.samples[i];
        if (stored == 0)
            continue;
        out.depth[i] = stored / 256.0;
        out.valid[i] = 1;
    }
    return out;
}

void write_depth_png(const DepthMap& depth, const std::string& path) {
    depth.validate();
    std::vector<std::uint16_t> samples(depth.size(), 0);
    for (std::size_t i = 0; i < depth.size(); ++i)
        if (depth.valid[i])
            samples[i] = quantize(depth.depth[i] * 256.0, 1.0, 65535.0);
    write_png(path, depth.width, depth.height, 1, 16, samples.data());
}

FlowField read_flow_png(const std::string& path) {
    const PngData png = read_png(path);
    if (png.bit_depth != 16 || png.channels != 3)
        throw FormatError("'" + path + "': flow fields must be 16-bit three-channel, got " +
                          std::to_string(png.bit_depth) + "-bit " + std::to_string(png.channels) +
                          "-channel");
    FlowField out(png.height, png.width, 0.0, 0.0, false);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (png.samples[3 * i + 2] == 0)
            continue;
        out.du[i] = (png.samples[3 * i] - 32768.0) / 64.0;
        out.dv[i] = (png.samples[3 * i + 1] - 32768.0) / 64.0;
        out.valid[i] = 1;
    }
    return out;
}

void write_flow_png(const FlowField& flow, const std::string& path) {
    flow.validate();
    std::vector<std::uint16_t> samples(flow.size() * 3, 0);
    for (std::size_t i = 0; i < flow.size(); ++i) {
        if (!flow.valid[i])
            continue;
        samples[3 * i] = quantize(flow.du[i] * 64.0 + 32768.0, 0.0, 65535.0);
        samples[3 * i + 1] = quantize(flow.dv[i] * 64.0 + 32768.0, 0.0, 65535.0);
        samples[3 * i + 2] = 1;
    }
    write_png(path, flow.width, flow.height, 3, 16, samples.data());
}

ImageBuffer read_image_png(const std::string& path) {
    const PngData png = read_png(path);
    const bool has_alpha = png.channels == 2 || png.channels == 4;
    const int channels = png.channels >= 3 ? 3 : 1;
    const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
    ImageBuffer out(png.height, png.width, channels);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (int c = 0; c < channels; ++c)
            out.data[i * channels + c] =
                png.samples[i * (channels + (has_alpha ? 1 : 0)) + c] / scale;
    return out;
}

void write_image_png(const ImageBuffer& image, const std::string& path, int bit_depth) {
    image.validate();
    if (image.channels != 1 && image.channels != 3)
        throw FormatError("write_image_png: images must have 1 or 3 channels");
    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i)
        samples[i] = quantize(image.data[i] * scale, 0.0, scale);
    write_png(path, image.width, image.height, image.channels, bit_depth, samples.data());
}

RegionLabels read_labels_png(const std::string& path) {
    const PngData png = read_png(path);
    if (png.bit_depth != 16 || png.channels != 1)
        throw FormatError("'" + path + "': label maps must be 16-bit single-channel");
    RegionLabels out;
    out.height = png.height;
    out.width = png.width;
    out.labels.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.labels[i] = png.samples[i];
    out.recount();
    return out;
}

void write_labels_png(const RegionLabels& labels, const std::string& path) {
    if (labels.region_count > 65536)
        throw FormatError("write_labels_png: more than 65536 regions");
    std::vector<std::uint16_t> samples(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        samples[i] = static_cast<std::uint16_t>(labels.labels[i]);
    write_png(path, labels.width, labels.height, 1, 16, samples.data());
}

CalibrationRecord read_calibration(const std::string& path, const std::string& key) {
    std::ifstream file(path);
    if (!file)
        throw IoError("cannot open '" + path + "' for reading");

    // Size keys matching the projection key's suffix, e.g. P_rect_02 -> S_rect_02.
    std::string size_key = "S";
    if (const std::size_t underscore = key.find('_'); underscore != std::string::npos)
        size_key += key.substr(underscore);

    CalibrationRecord record;
    bool have_projection = false;
    bool have_size = false;
    std::string line;
    while (std::getline(file, line)) {
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        std::string name = line.substr(0, colon);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        if (name == key) {
            std::istringstream values(line.substr(colon + 1));
            for (double& p : record.projection)
                if (!(values >> p))
                    throw ParseError("calibration '" + path + "': key '" + key +
                                     "' does not carry 12 reals");
            have_projection = true;
        } else if (name == size_key) {
            std::istringstream values(line.substr(colon + 1));
            double w = 0.0, h = 0.0;
            if (!(values >> w >> h))
                throw ParseError("calibration '" + path + "': key '" + size_key +
                                 "' does not carry an image size");
            record.native_width = static_cast<int>(std::lround(w));
            record.native_height = static_cast<int>(std::lround(h));
            have_size = true;
        }
    }
    if (!have_projection)
        throw ParseError("calibration '" + path + "': missing key '" + key + "'");
    if (!have_size)
        throw ParseError("calibration '" + path + "': missing key '" + size_key + "'");

    record.intrinsics = Intrinsics(record.projection[0], record.projection[5],
                                   record.projection[2], record.projection[6],
                                   record.native_width, record.native_height);
    return record;
}

Intrinsics rescale_intrinsics(const Intrinsics& intrinsics, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw ConfigError("rescale_intrinsics: target size must be positive");
    const double sx = static_cast<double>(new_width) / intrinsics.width;
    const double sy = static_cast<double>(new_height) / intrinsics.height;
    return Intrinsics(intrinsics.fx * sx, intrinsics.fy * sy, intrinsics.cx * sx,
                      intrinsics.cy * sy, new_width, new_height);
}

namespace {

// Pixel-center source coordinate for a target index.
inline double source_coord(int index, int target_size, int source_size) {
    const double scale = static_cast<double>(source_size) / target_size;
    return (index + 0.5) * scale - 0.5;
}

} // namespace

ImageBuffer resize_image(const ImageBuffer& image, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw ConfigError("resize_image: target size must be positive");
    ImageBuffer out(new_height, new_width, image.channels, 0.0, false);
    for (int y = 0; y < new_height; ++y) {
        const double sv = std::clamp(source_coord(y, new_height, image.height), 0.0,
                                     image.height - 1.0);
        const int y0 = std::min(static_cast<int>(std::floor(sv)), image.height - 1);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double fv = sv - y0;
        for (int x = 0; x < new_width; ++x) {
            const double su = std::clamp(source_coord(x, new_width, image.width), 0.0,
                                         image.width - 1.0);
            const int x0 = std::min(static_cast<int>(std::floor(su)), image.width - 1);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double fu = su - x0;
            bool ok = true;
            if (fu > 0.0 && fv > 0.0)
                ok = image.is_valid(y0, x0) && image.is_valid(y0, x1) && image.is_valid(y1, x0) &&
                     image.is_valid(y1, x1);
            else if (fu > 0.0)
                ok = image.is_valid(y0, x0) && image.is_valid(y0, x1);
            else if (fv > 0.0)
                ok = image.is_valid(y0, x0) && image.is_valid(y1, x0);
            else
                ok = image.is_valid(y0, x0);
            for (int c = 0; c < image.channels; ++c) {
                const double top =
                    (1.0 - fu) * image.at(y0, x0, c) + fu * image.at(y0, x1, c);
                const double bot =
                    (1.0 - fu) * image.at(y1, x0, c) + fu * image.at(y1, x1, c);
                out.at(y, x, c) = (1.0 - fv) * top + fv * bot;
            }
            out.set_valid(y, x, ok);
        }
    }
    return out;
}

DepthMap resize_depth(const DepthMap& depth, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw ConfigError("resize_depth: target size must be positive");
    DepthMap out(new_height, new_width);
    for (int y = 0; y < new_height; ++y) {
        const int sy = std::clamp(
            static_cast<int>(std::lround(source_coord(y, new_height, depth.height))), 0,
            depth.height - 1);
        for (int x = 0; x < new_width; ++x) {
            const int sx = std::clamp(
                static_cast<int>(std::lround(source_coord(x, new_width, depth.width))), 0,
                depth.width - 1);
            out.at(y, x) = depth.at(sy, sx);
            out.set_valid(y, x, depth.is_valid(sy, sx));
        }
    }
    return out;
}

FlowField resize_flow(const FlowField& flow, int new_width, int new_height) {
    if (new_width < 1 || new_height < 1)
        throw ConfigError("resize_flow: target size must be positive");
    const double ratio_u = static_cast<double>(new_width) / flow.width;
    const double ratio_v = static_cast<double>(new_height) / flow.height;
    FlowField out(new_height, new_width, 0.0, 0.0, false);
    for (int y = 0; y < new_height; ++y) {
        const double sv =
            std::clamp(source_coord(y, new_height, flow.height), 0.0, flow.height - 1.0);
        const int y0 = std::min(static_cast<int>(std::floor(sv)), flow.height - 1);
        const int y1 = std::min(y0 + 1, flow.height - 1);
        const double fv = sv - y0;
        for (int x = 0; x < new_width; ++x) {
            const double su =
                std::clamp(source_coord(x, new_width, flow.width), 0.0, flow.width - 1.0);
            const int x0 = std::min(static_cast<int>(std::floor(su)), flow.width - 1);
            const int x1 = std::min(x0 + 1, flow.width - 1);
            const double fu = su - x0;
            bool ok = true;
            for (int yy : {y0, y1})
                for (int xx : {x0, x1})
                    ok = ok && flow.is_valid(yy, xx);
            if (!ok)
                continue;
            const double u = (1.0 - fv) * ((1.0 - fu) * flow.u(y0, x0) + fu * flow.u(y0, x1)) +
                             fv * ((1.0 - fu) * flow.u(y1, x0) + fu * flow.u(y1, x1));
            const double v = (1.0 - fv) * ((1.0 - fu) * flow.v(y0, x0) + fu * flow.v(y0, x1)) +
                             fv * ((1.0 - fu) * flow.v(y1, x0) + fu * flow.v(y1, x1));
            out.u(y, x) = u * ratio_u;
            out.v(y, x) = v * ratio_v;
            out.set_valid(y, x, true);
        }
    }
    return out;
}

} // namespace flowdepth
