#pragma once

// Minimal single-band GeoTIFF I/O: uncompressed strips, north-up
// scale+translate geotransform (ModelPixelScale + ModelTiepoint),
// GDAL_NODATA tag, CRS identifier passed through the GeoTIFF citation key.
// Rotated geotransforms, tiled layouts and compression are rejected.

#include <string>

#include "lczgrid/raster.hpp"

namespace lczgrid {

template <class T>
Raster<T> read_geotiff(const std::string& path);

template <class T>
void write_geotiff(const Raster<T>& r, const std::string& path);

}  // namespace lczgrid
