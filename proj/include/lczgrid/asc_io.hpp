#pragma once

// ESRI ASCII grid (.asc) reader/writer. Header keys ncols/nrows/xllcorner/
// yllcorner/cellsize/NODATA_value (case-insensitive, xllcenter accepted),
// then whitespace-separated rows, north row first. CRS is carried in an
// optional sidecar .prj file holding the identifier string verbatim.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>

#include "lczgrid/raster.hpp"

namespace lczgrid {

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

template <class T>
std::string format_cell(T v) {
    if constexpr (std::is_integral_v<T>) {
        return std::to_string(v);
    } else {
        if (std::isnan(static_cast<double>(v))) return "nan";
        char buf[48];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    }
}

template <class T>
T parse_cell(const std::string& tok, const std::string& path) {
    if constexpr (std::is_integral_v<T>) {
        long long v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size()) {
            // integer rasters written by other tools sometimes carry "12.0"
            double d = 0;
            try {
                size_t pos = 0;
                d = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (...) {
                throw IoError(path + ": bad cell value '" + tok + "'");
            }
            if (std::rint(d) != d) throw IoError(path + ": non-integer cell value '" + tok + "'");
            v = static_cast<long long>(d);
        }
        return static_cast<T>(v);
    } else {
        try {
            size_t pos = 0;
            double d = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return static_cast<T>(d);
        } catch (...) {
            throw IoError(path + ": bad cell value '" + tok + "'");
        }
    }
}

inline std::filesystem::path prj_sidecar(const std::filesystem::path& p) {
    std::filesystem::path q = p;
    q.replace_extension(".prj");
    return q;
}

}  // namespace detail

template <class T>
Raster<T> read_asc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    int ncols = -1, nrows = -1;
    double xll = 0, yll = 0, cell = 0, nodata = -9999;
    bool xcenter = false, ycenter = false, have_nodata = false;

    // Six header lines at most; cellsize/NODATA_value may be missing in the
    // wild but we require at least dimensions, corner and cellsize.
    std::string key;
    int header_fields = 0;
    while (header_fields < 6 && in >> key) {
        const std::string k = detail::lower(key);
        if (k == "ncols" || k == "nrows") {
            int v;
            if (!(in >> v)) throw IoError(path + ": bad header value for " + k);
            (k == "ncols" ? ncols : nrows) = v;
        } else if (k == "xllcorner" || k == "yllcorner" || k == "xllcenter" || k == "yllcenter" ||
                   k == "cellsize" || k == "nodata_value") {
            double v;
            if (!(in >> v)) throw IoError(path + ": bad header value for " + k);
            if (k == "xllcorner") xll = v;
            if (k == "xllcenter") xll = v, xcenter = true;
            if (k == "yllcorner") yll = v;
            if (k == "yllcenter") yll = v, ycenter = true;
            if (k == "cellsize") cell = v;
            if (k == "nodata_value") nodata = v, have_nodata = true;
        } else {
            break;  // first data token
        }
        ++header_fields;
        key.clear();
    }
    if (ncols <= 0 || nrows <= 0) throw IoError(path + ": missing or invalid ncols/nrows");
    if (!(cell > 0)) throw IoError(path + ": missing or invalid cellsize (square cells required)");
    if (xcenter) xll -= 0.5 * cell;
    if (ycenter) yll -= 0.5 * cell;

    GeoRef g;
    g.cell_size = cell;
    g.origin_x = xll;
    g.origin_y = yll + nrows * cell;
    {
        std::ifstream prj(detail::prj_sidecar(path));
        if (prj) {
            std::string s((std::istreambuf_iterator<char>(prj)), std::istreambuf_iterator<char>());
            while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
            g.crs_id = s;
        }
    }

    T nodata_t;
    if constexpr (std::is_integral_v<T>)
        nodata_t = static_cast<T>(std::llrint(nodata));
    else
        nodata_t = static_cast<T>(nodata);
    Raster<T> r = make_raster<T>(ncols, nrows, g, nodata_t);
    (void)have_nodata;

    std::string tok = key;  // `key` may already hold the first data token
    for (std::int64_t idx = 0; idx < r.size(); ++idx) {
        if (tok.empty() && !(in >> tok)) throw IoError(path + ": truncated grid data");
        r.cells.data()[idx] = detail::parse_cell<T>(tok, path);
        tok.clear();
    }
    return r;
}

template <class T>
void write_asc(const Raster<T>& r, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    char head[256];
    const double yll = r.georef.origin_y - r.height() * r.georef.cell_size;
    std::snprintf(head, sizeof(head),
                  "ncols %d\nnrows %d\nxllcorner %s\nyllcorner %s\ncellsize %s\nNODATA_value %s\n",
                  r.width(), r.height(), detail::format_cell(r.georef.origin_x).c_str(),
                  detail::format_cell(yll).c_str(), detail::format_cell(r.georef.cell_size).c_str(),
                  detail::format_cell(r.nodata).c_str());
    out << head;
    for (int row = 0; row < r.height(); ++row) {
        for (int col = 0; col < r.width(); ++col) {
            if (col) out << ' ';
            out << detail::format_cell(r.cells(row, col));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
    if (!r.georef.crs_id.empty()) {
        std::ofstream prj(detail::prj_sidecar(path), std::ios::trunc);
        prj << r.georef.crs_id << '\n';
    }
}

}  // namespace lczgrid
