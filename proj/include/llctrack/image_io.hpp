#pragma once

#include <llctrack/error.hpp>
#include <llctrack/imaging.hpp>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace llctrack {

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

/// Parses a binary PGM (P5) with maxval up to 65535.
inline GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes)
{
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            ++pos;
            if (++digits > 9) throw Error(ErrorCode::DecodeError, "PGM header value too large");
        }
        if (digits == 0) throw Error(ErrorCode::DecodeError, "malformed PGM header");
        return value;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw Error(ErrorCode::DecodeError, "not a binary PGM (P5)");
    }
    pos = 2;
    const long width = read_int();
    const long height = read_int();
    const long maxval = read_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw Error(ErrorCode::DecodeError, "invalid PGM dimensions or maxval");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw Error(ErrorCode::DecodeError, "missing PGM header terminator");
    }
    ++pos;
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - pos < count * bpp) {
        throw Error(ErrorCode::DecodeError, "truncated PGM pixel data");
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned raw = bpp == 1 ? bytes[pos + i]
                                      : (static_cast<unsigned>(bytes[pos + 2 * i]) << 8) |
                                            bytes[pos + 2 * i + 1];
        data[i] = std::min(1.0, static_cast<double>(raw) / static_cast<double>(maxval));
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

/// Writes an 8-bit P5 PGM; intensities are rounded to the nearest level.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<char> buf(img.data().size());
    std::transform(img.data().begin(), img.data().end(), buf.begin(), [](double v) {
        return static_cast<char>(
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    });
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

/// Decodes PNG or JPEG bytes to RGB.
inline RgbImage decode_rgb(const std::vector<std::uint8_t>& bytes)
{
    const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                         const_cast<std::uint8_t*>(bytes.data()));
    const cv::Mat bgr = cv::imdecode(buffer, cv::IMREAD_COLOR);
    if (bgr.empty() || bgr.type() != CV_8UC3) {
        throw Error(ErrorCode::DecodeError, "cannot decode image");
    }
    RgbImage out{bgr.cols, bgr.rows, {}};
    out.data.resize(static_cast<std::size_t>(bgr.cols) * bgr.rows * 3);
    std::size_t i = 0;
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.data[i++] = row[x][2];
            out.data[i++] = row[x][1];
            out.data[i++] = row[x][0];
        }
    }
    return out;
}

/// Loads a frame as grayscale. PGM is recognized by its magic bytes,
/// everything else goes through the PNG/JPEG decoder.
inline GrayImage load_frame(const std::filesystem::path& path)
{
    const auto bytes = detail::read_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
    try {
        return to_gray(decode_rgb(bytes));
    } catch (const Error& e) {
        throw Error(ErrorCode::DecodeError, path.string() + ": " + e.what());
    }
}

/// Encodes through OpenCV; the format follows the file extension.
inline void write_image(const std::filesystem::path& path, const GrayImage& img)
{
    cv::Mat mat(img.height(), img.width(), CV_8UC1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            mat.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(
                std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
        }
    }
    if (!cv::imwrite(path.string(), mat)) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
}

} // namespace llctrack
