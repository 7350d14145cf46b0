#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "switchcode/encoders.hpp"

namespace switchcode {

// Feature hyperplane normal.x + offset = 0.  For rectified features this is
// the activation boundary; for sigmoid features the 0.5 level set — the same
// plane either way.  anchor is a point on the plane (the foot of the
// perpendicular from the origin).
struct Plane {
    Vector normal;
    double offset = 0.0;
    Index feature_index = 0;
    Vector anchor;
};

struct PlaneSet {
    std::vector<Plane> planes;
    // Features whose weight vector had zero norm and therefore no plane.
    std::vector<Index> skipped;
};

/// One plane per feature of a single-layer model (tied or untied).
PlaneSet hyperplanes(const Model& model);

// Encoder responses sampled on an inclusive 2D lattice.  values is row-major
// with x fastest: values[iy * res_x + ix].  feature < 0 sums the code over
// features (in ascending order, so the per-feature grids added the same way
// match it exactly); feature >= 0 picks that coordinate.
struct ResponseGrid {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    Index res_x = 0, res_y = 0;
    Index feature = -1;
    std::vector<double> values;
};

ResponseGrid response_grid(const Model& model, double x_min, double x_max,
                           double y_min, double y_max, Index res_x, Index res_y,
                           Index feature = -1, int threads = 1);

struct GrayImage {
    Index rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

// One feature vector reshaped row-major and linearly rescaled so its minimum
// maps to 0 and maximum to 255; a constant tile maps to 128.  The rescale
// ignores positive scaling of the feature.
GrayImage feature_tile(const Vector& w, Index rows, Index cols);

// Montage of selected rows of a weight matrix, in the given order, laid out
// left-to-right in a near-square grid; unused cells stay black.
GrayImage tile_montage(const Matrix& weights, Index rows, Index cols,
                       const std::vector<Index>& order);

/// All features of a single-layer model, ordered by descending bias.
GrayImage feature_tiles(const Model& model, Index rows, Index cols);

// The `top` highest-bias features of a tied single-layer model, one per
// montage row, each beside its maximally negative partner.
GrayImage pair_tiles(const Model& model, Index rows, Index cols, Index top);

struct PairingEntry {
    Index feature = 0;
    Index pair = 0;
    double dot = 0.0;
    double cosine = 0.0;
    double bias = 0.0;
};

/// negative_pair over every feature, sorted by descending bias.
std::vector<PairingEntry> pairing_report(const Model& model);
Json pairing_report_to_json(const std::vector<PairingEntry>& report);

void write_pgm(const GrayImage& image, const std::string& path);

/// CSV rows "x,y,value", x fastest, 17-significant-digit floats.
void write_grid_csv(const ResponseGrid& grid, const std::string& path);

// 3D planes clipped to the axis-aligned box [lo, hi], one polygon face per
// plane.  Planes that miss the box are dropped.
void write_planes_obj(const PlaneSet& set, const Vector& lo, const Vector& hi,
                      const std::string& path);

// 2D planes as line segments clipped to the rectangle, CSV columns
// feature,x0,y0,x1,y1.  Lines that miss the rectangle are dropped.
void write_planes_csv(const PlaneSet& set, double x_min, double x_max,
                      double y_min, double y_max, const std::string& path);

}  // namespace switchcode
