#include "lczgrid/geotiff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

namespace lczgrid {
namespace {

enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kTileWidth = 322,
    kSampleFormat = 339,
    kModelPixelScale = 33550,
    kModelTiepoint = 33922,
    kModelTransformation = 34264,
    kGeoKeyDirectory = 34735,
    kGeoAsciiParams = 34737,
    kGdalNodata = 42113,
};

enum FieldType : std::uint16_t {
    kByte = 1,
    kAscii = 2,
    kShort = 3,
    kLong = 4,
    kDouble = 12,
};

constexpr std::size_t field_size(std::uint16_t type) {
    switch (type) {
        case kByte:
        case kAscii: return 1;
        case kShort: return 2;
        case kLong: return 4;
        case kDouble: return 8;
        default: return 0;
    }
}

// ---------------------------------------------------------------- reading

struct ByteReader {
    const std::vector<unsigned char>& buf;
    bool swap = false;

    template <class U>
    U at(std::size_t off) const {
        if (off + sizeof(U) > buf.size()) throw IoError("geotiff: truncated file");
        U v;
        std::memcpy(&v, buf.data() + off, sizeof(U));
        if (swap) {
            unsigned char* p = reinterpret_cast<unsigned char*>(&v);
            std::reverse(p, p + sizeof(U));
        }
        return v;
    }
};

struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t off = 0;  // absolute offset of the value bytes
};

struct Ifd {
    std::map<std::uint16_t, Field> fields;

    bool has(std::uint16_t tag) const { return fields.count(tag) != 0; }

    std::vector<double> values(const ByteReader& r, std::uint16_t tag) const {
        auto it = fields.find(tag);
        if (it == fields.end()) return {};
        const Field& f = it->second;
        std::vector<double> out;
        out.reserve(f.count);
        for (std::uint32_t i = 0; i < f.count; ++i) {
            const std::size_t o = f.off + i * field_size(f.type);
            switch (f.type) {
                case kByte: out.push_back(r.at<std::uint8_t>(o)); break;
                case kShort: out.push_back(r.at<std::uint16_t>(o)); break;
                case kLong: out.push_back(r.at<std::uint32_t>(o)); break;
                case kDouble: out.push_back(r.at<double>(o)); break;
                default: throw IoError("geotiff: unsupported field type");
            }
        }
        return out;
    }

    double scalar(const ByteReader& r, std::uint16_t tag, double fallback) const {
        auto v = values(r, tag);
        return v.empty() ? fallback : v[0];
    }

    std::string ascii(const ByteReader& r, std::uint16_t tag) const {
        auto it = fields.find(tag);
        if (it == fields.end() || it->second.type != kAscii) return {};
        const Field& f = it->second;
        std::string s;
        for (std::uint32_t i = 0; i < f.count; ++i) {
            char c = static_cast<char>(r.at<std::uint8_t>(f.off + i));
            if (c == '\0') break;
            s.push_back(c);
        }
        return s;
    }
};

struct TiffImage {
    int width = 0, height = 0;
    int bits = 32;
    int sample_format = 1;  // 1 uint, 2 int, 3 float
    GeoRef georef;
    double nodata = -9999.0;
    bool has_nodata = false;
    std::vector<unsigned char> pixels;  // native-endian, row-major
};

TiffImage read_tiff_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 8) throw IoError(path + ": not a TIFF file");

    ByteReader r{buf};
    if (buf[0] == 'I' && buf[1] == 'I') {
        r.swap = false;
    } else if (buf[0] == 'M' && buf[1] == 'M') {
        r.swap = true;
    } else {
        throw IoError(path + ": not a TIFF file");
    }
    const std::uint16_t magic = r.at<std::uint16_t>(2);
    if (magic == 43) throw IoError(path + ": BigTIFF is not supported");
    if (magic != 42) throw IoError(path + ": not a TIFF file");

    const std::uint32_t ifd_off = r.at<std::uint32_t>(4);
    const std::uint16_t n = r.at<std::uint16_t>(ifd_off);
    Ifd ifd;
    for (std::uint16_t i = 0; i < n; ++i) {
        const std::size_t e = ifd_off + 2 + std::size_t(i) * 12;
        Field f;
        const std::uint16_t tag = r.at<std::uint16_t>(e);
        f.type = r.at<std::uint16_t>(e + 2);
        f.count = r.at<std::uint32_t>(e + 4);
        const std::size_t bytes = field_size(f.type) * f.count;
        f.off = bytes <= 4 ? e + 8 : r.at<std::uint32_t>(e + 8);
        if (field_size(f.type) != 0) ifd.fields[tag] = f;
    }

    TiffImage img;
    img.width = static_cast<int>(ifd.scalar(r, kImageWidth, 0));
    img.height = static_cast<int>(ifd.scalar(r, kImageLength, 0));
    if (img.width <= 0 || img.height <= 0) throw IoError(path + ": missing image dimensions");
    if (ifd.scalar(r, kCompression, 1) != 1)
        throw IoError(path + ": compressed TIFF is not supported");
    if (ifd.scalar(r, kSamplesPerPixel, 1) != 1)
        throw IoError(path + ": only single-band rasters are supported");
    if (ifd.has(kTileWidth)) throw IoError(path + ": tiled TIFF is not supported");
    img.bits = static_cast<int>(ifd.scalar(r, kBitsPerSample, 8));
    img.sample_format = static_cast<int>(ifd.scalar(r, kSampleFormat, 1));
    if (img.bits != 8 && img.bits != 16 && img.bits != 32 && img.bits != 64)
        throw IoError(path + ": unsupported bit depth " + std::to_string(img.bits));

    // Geotransform: pixel scale + tiepoint, or an axis-aligned 4x4 transform.
    const auto scale = ifd.values(r, kModelPixelScale);
    const auto tie = ifd.values(r, kModelTiepoint);
    const auto xform = ifd.values(r, kModelTransformation);
    if (!xform.empty()) {
        if (xform.size() != 16 || xform[1] != 0.0 || xform[4] != 0.0)
            throw IoError(path + ": rotated geotransforms are rejected (north-up only)");
        img.georef.cell_size = xform[0];
        if (std::abs(-xform[5] - xform[0]) > 1e-9 * std::abs(xform[0]))
            throw IoError(path + ": rectangular cells are rejected (square cells only)");
        img.georef.origin_x = xform[3];
        img.georef.origin_y = xform[7];
    } else if (scale.size() >= 2 && tie.size() >= 6) {
        if (std::abs(scale[0] - scale[1]) > 1e-9 * std::abs(scale[0]))
            throw IoError(path + ": rectangular cells are rejected (square cells only)");
        img.georef.cell_size = scale[0];
        img.georef.origin_x = tie[3] - tie[0] * scale[0];
        img.georef.origin_y = tie[4] + tie[1] * scale[1];
    } else {
        throw IoError(path + ": missing geotransform (ModelPixelScale + ModelTiepoint)");
    }
    if (!(img.georef.cell_size > 0)) throw IoError(path + ": non-positive cell size");

    img.georef.crs_id = ifd.ascii(r, kGeoAsciiParams);
    while (!img.georef.crs_id.empty() && img.georef.crs_id.back() == '|')
        img.georef.crs_id.pop_back();

    const std::string nod = ifd.ascii(r, kGdalNodata);
    if (!nod.empty()) {
        try {
            img.nodata = std::stod(nod);
            img.has_nodata = true;
        } catch (...) {
            throw IoError(path + ": bad GDAL_NODATA value '" + nod + "'");
        }
    }

    const auto offsets = ifd.values(r, kStripOffsets);
    auto counts = ifd.values(r, kStripByteCounts);
    if (offsets.empty()) throw IoError(path + ": missing strip offsets");
    const std::size_t bytes_per_row = std::size_t(img.width) * (img.bits / 8);
    const int rows_per_strip =
        static_cast<int>(ifd.scalar(r, kRowsPerStrip, static_cast<double>(img.height)));
    if (counts.empty()) {
        // tolerate a missing StripByteCounts for a single full strip
        if (offsets.size() != 1) throw IoError(path + ": missing strip byte counts");
        counts.push_back(static_cast<double>(bytes_per_row * img.height));
    }

    img.pixels.resize(bytes_per_row * img.height);
    std::size_t written = 0;
    for (std::size_t s = 0; s < offsets.size(); ++s) {
        const std::size_t off = static_cast<std::size_t>(offsets[s]);
        const std::size_t cnt = static_cast<std::size_t>(counts[s]);
        if (off + cnt > buf.size()) throw IoError(path + ": strip beyond end of file");
        if (written + cnt > img.pixels.size()) throw IoError(path + ": strip data overflow");
        std::memcpy(img.pixels.data() + written, buf.data() + off, cnt);
        written += cnt;
    }
    if (written != img.pixels.size()) throw IoError(path + ": incomplete pixel data");
    (void)rows_per_strip;

    if (r.swap && img.bits > 8) {
        const std::size_t w = img.bits / 8;
        for (std::size_t i = 0; i < img.pixels.size(); i += w)
            std::reverse(img.pixels.begin() + i, img.pixels.begin() + i + w);
    }
    return img;
}

template <class T>
void convert_pixels(const TiffImage& img, Raster<T>& out) {
    const std::int64_t n = out.size();
    T* dst = out.cells.data();
    const unsigned char* src = img.pixels.data();
    auto fill = [&](auto sample_of) {
        for (std::int64_t i = 0; i < n; ++i) dst[i] = static_cast<T>(sample_of(i));
    };
    const int key = img.sample_format * 100 + img.bits;
    switch (key) {
        case 108: fill([&](std::int64_t i) { std::uint8_t v; std::memcpy(&v, src + i, 1); return v; }); break;
        case 116: fill([&](std::int64_t i) { std::uint16_t v; std::memcpy(&v, src + i * 2, 2); return v; }); break;
        case 132: fill([&](std::int64_t i) { std::uint32_t v; std::memcpy(&v, src + i * 4, 4); return v; }); break;
        case 208: fill([&](std::int64_t i) { std::int8_t v; std::memcpy(&v, src + i, 1); return v; }); break;
        case 216: fill([&](std::int64_t i) { std::int16_t v; std::memcpy(&v, src + i * 2, 2); return v; }); break;
        case 232: fill([&](std::int64_t i) { std::int32_t v; std::memcpy(&v, src + i * 4, 4); return v; }); break;
        case 332: fill([&](std::int64_t i) { float v; std::memcpy(&v, src + i * 4, 4); return v; }); break;
        case 364: fill([&](std::int64_t i) { double v; std::memcpy(&v, src + i * 8, 8); return v; }); break;
        default:
            throw IoError("geotiff: unsupported sample format " +
                          std::to_string(img.sample_format) + "/" + std::to_string(img.bits));
    }
}

// ---------------------------------------------------------------- writing

struct TiffWriter {
    std::vector<unsigned char> out;

    template <class U>
    void put(U v) {
        const std::size_t o = out.size();
        out.resize(o + sizeof(U));
        std::memcpy(out.data() + o, &v, sizeof(U));
    }
    template <class U>
    void patch(std::size_t off, U v) {
        std::memcpy(out.data() + off, &v, sizeof(U));
    }
};

struct Entry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::vector<unsigned char> payload;  // raw little-endian value bytes
};

template <class U>
void append(std::vector<unsigned char>& v, U x) {
    const std::size_t o = v.size();
    v.resize(o + sizeof(U));
    std::memcpy(v.data() + o, &x, sizeof(U));
}

template <class T>
constexpr int sample_format_of() {
    if constexpr (std::is_floating_point_v<T>) return 3;
    else if constexpr (std::is_signed_v<T>) return 2;
    else return 1;
}

std::string format_double(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

template <class T>
Raster<T> read_geotiff(const std::string& path) {
    TiffImage img = read_tiff_image(path);
    GeoRef g = img.georef;
    T nodata_t;
    if constexpr (std::is_integral_v<T>)
        nodata_t = static_cast<T>(std::llrint(img.nodata));
    else
        nodata_t = static_cast<T>(img.nodata);
    Raster<T> r = make_raster<T>(img.width, img.height, g, nodata_t);
    convert_pixels(img, r);
    return r;
}

template <class T>
void write_geotiff(const Raster<T>& r, const std::string& path) {
    static_assert(sizeof(T) == 1 || sizeof(T) == 2 || sizeof(T) == 4 || sizeof(T) == 8);
    TiffWriter w;
    // header: little-endian classic TIFF, IFD offset patched at the end
    w.put<std::uint8_t>('I');
    w.put<std::uint8_t>('I');
    w.put<std::uint16_t>(42);
    const std::size_t ifd_ptr_off = w.out.size();
    w.put<std::uint32_t>(0);

    const std::size_t data_off = w.out.size();
    const std::size_t data_bytes = std::size_t(r.size()) * sizeof(T);
    w.out.resize(data_off + data_bytes);
    std::memcpy(w.out.data() + data_off, r.cells.data(), data_bytes);

    std::vector<Entry> entries;
    auto add_scalar = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t v) {
        Entry e{tag, type, 1, {}};
        if (type == kShort)
            append<std::uint16_t>(e.payload, static_cast<std::uint16_t>(v));
        else
            append<std::uint32_t>(e.payload, v);
        entries.push_back(std::move(e));
    };
    auto add_doubles = [&](std::uint16_t tag, const std::vector<double>& vs) {
        Entry e{tag, kDouble, static_cast<std::uint32_t>(vs.size()), {}};
        for (double v : vs) append(e.payload, v);
        entries.push_back(std::move(e));
    };
    auto add_ascii = [&](std::uint16_t tag, std::string s) {
        s.push_back('\0');
        Entry e{tag, kAscii, static_cast<std::uint32_t>(s.size()), {}};
        e.payload.assign(s.begin(), s.end());
        entries.push_back(std::move(e));
    };

    add_scalar(kImageWidth, kLong, static_cast<std::uint32_t>(r.width()));
    add_scalar(kImageLength, kLong, static_cast<std::uint32_t>(r.height()));
    add_scalar(kBitsPerSample, kShort, sizeof(T) * 8);
    add_scalar(kCompression, kShort, 1);
    add_scalar(kPhotometric, kShort, 1);
    add_scalar(kStripOffsets, kLong, static_cast<std::uint32_t>(data_off));
    add_scalar(kSamplesPerPixel, kShort, 1);
    add_scalar(kRowsPerStrip, kLong, static_cast<std::uint32_t>(r.height()));
    add_scalar(kStripByteCounts, kLong, static_cast<std::uint32_t>(data_bytes));
    add_scalar(kSampleFormat, kShort, sample_format_of<T>());
    add_doubles(kModelPixelScale, {r.georef.cell_size, r.georef.cell_size, 0.0});
    add_doubles(kModelTiepoint, {0.0, 0.0, 0.0, r.georef.origin_x, r.georef.origin_y, 0.0});
    {
        // GeoKeyDirectory: model type = projected, raster type = PixelIsArea,
        // citation carries the opaque CRS identifier when present.
        std::vector<std::uint16_t> keys = {1, 1, 0, 2, 1024, 0, 1, 1, 1025, 0, 1, 1};
        if (!r.georef.crs_id.empty()) {
            keys[3] = 3;
            const auto len = static_cast<std::uint16_t>(r.georef.crs_id.size() + 1);
            std::vector<std::uint16_t> cit = {1026, kGeoAsciiParams, len, 0};
            keys.insert(keys.end(), cit.begin(), cit.end());
        }
        Entry e{kGeoKeyDirectory, kShort, static_cast<std::uint32_t>(keys.size()), {}};
        for (auto k : keys) append(e.payload, k);
        entries.push_back(std::move(e));
        if (!r.georef.crs_id.empty()) add_ascii(kGeoAsciiParams, r.georef.crs_id + "|");
    }
    add_ascii(kGdalNodata, format_double(static_cast<double>(r.nodata)));

    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

    // out-of-line payloads first, then the IFD
    std::vector<std::uint32_t> ext_off(entries.size(), 0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].payload.size() > 4) {
            if (w.out.size() % 2) w.put<std::uint8_t>(0);
            ext_off[i] = static_cast<std::uint32_t>(w.out.size());
            w.out.insert(w.out.end(), entries[i].payload.begin(), entries[i].payload.end());
        }
    }
    if (w.out.size() % 2) w.put<std::uint8_t>(0);
    const std::uint32_t ifd_off = static_cast<std::uint32_t>(w.out.size());
    w.put<std::uint16_t>(static_cast<std::uint16_t>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        w.put<std::uint16_t>(e.tag);
        w.put<std::uint16_t>(e.type);
        w.put<std::uint32_t>(e.count);
        if (e.payload.size() <= 4) {
            unsigned char four[4] = {0, 0, 0, 0};
            std::memcpy(four, e.payload.data(), e.payload.size());
            w.out.insert(w.out.end(), four, four + 4);
        } else {
            w.put<std::uint32_t>(ext_off[i]);
        }
    }
    w.put<std::uint32_t>(0);  // no next IFD
    w.patch(ifd_ptr_off, ifd_off);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(w.out.data()),
              static_cast<std::streamsize>(w.out.size()));
    if (!out) throw IoError("write failed: " + path);
}

template Raster<float> read_geotiff<float>(const std::string&);
template Raster<double> read_geotiff<double>(const std::string&);
template Raster<std::int32_t> read_geotiff<std::int32_t>(const std::string&);
template Raster<std::uint8_t> read_geotiff<std::uint8_t>(const std::string&);

template void write_geotiff<float>(const Raster<float>&, const std::string&);
template void write_geotiff<double>(const Raster<double>&, const std::string&);
template void write_geotiff<std::int32_t>(const Raster<std::int32_t>&, const std::string&);
template void write_geotiff<std::uint8_t>(const Raster<std::uint8_t>&, const std::string&);

}  // namespace lczgrid
