#include "switchcode/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "switchcode/text.hpp"

namespace switchcode {

namespace {

const Layer& single_layer(const Model& model, const char* who) {
    if (model.encoder.size() != 1) {
        throw std::invalid_argument(std::string(who) + ": requires a single-layer model");
    }
    return model.encoder.front();
}

// Feature indices sorted by descending bias, ties by ascending index.
std::vector<Index> descending_bias_order(const Layer& layer) {
    std::vector<Index> order(static_cast<std::size_t>(layer.out_dim()));
    for (Index j = 0; j < layer.out_dim(); ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return layer.bias[a] > layer.bias[b];
    });
    return order;
}

double grid_coordinate(double lo, double hi, Index i, Index res) {
    return res < 2 ? lo : lo + double(i) * (hi - lo) / double(res - 1);
}

}  // namespace

PlaneSet hyperplanes(const Model& model) {
    const Layer& layer = single_layer(model, "hyperplanes");
    PlaneSet set;
    for (Index j = 0; j < layer.out_dim(); ++j) {
        Vector w = layer.weights.row(j).transpose();
        const double sq = w.squaredNorm();
        if (sq == 0.0) {
            set.skipped.push_back(j);
            continue;
        }
        Plane plane;
        plane.normal = std::move(w);
        plane.offset = layer.bias[j];
        plane.feature_index = j;
        plane.anchor = -(plane.offset / sq) * plane.normal;
        set.planes.push_back(std::move(plane));
    }
    return set;
}

ResponseGrid response_grid(const Model& model, double x_min, double x_max,
                           double y_min, double y_max, Index res_x, Index res_y,
                           Index feature, int threads) {
    model.validate();
    if (model.input_dim() != 2) {
        throw std::invalid_argument("response_grid: model input must be 2D");
    }
    if (res_x < 1 || res_y < 1) {
        throw std::invalid_argument("response_grid: resolution must be positive");
    }
    if (!(x_min <= x_max) || !(y_min <= y_max)) {
        throw std::invalid_argument("response_grid: bounds must be ordered");
    }
    if (feature >= model.code_dim()) {
        throw std::invalid_argument("response_grid: feature index out of range");
    }

    ResponseGrid grid;
    grid.x_min = x_min;
    grid.x_max = x_max;
    grid.y_min = y_min;
    grid.y_max = y_max;
    grid.res_x = res_x;
    grid.res_y = res_y;
    grid.feature = feature < 0 ? -1 : feature;
    grid.values.assign(static_cast<std::size_t>(res_x * res_y), 0.0);

    auto fill_rows = [&](Index row_begin, Index row_end) {
        Vector point(2);
        for (Index iy = row_begin; iy < row_end; ++iy) {
            point[1] = grid_coordinate(y_min, y_max, iy, res_y);
            for (Index ix = 0; ix < res_x; ++ix) {
                point[0] = grid_coordinate(x_min, x_max, ix, res_x);
                const Encoding enc = encode(model, point);
                double v;
                if (feature >= 0) {
                    v = enc.h[feature];
                } else {
                    // Plain ascending accumulation; per-feature grids summed
                    // the same way reproduce this bit for bit.
                    v = 0.0;
                    for (Index j = 0; j < enc.h.size(); ++j) v += enc.h[j];
                }
                grid.values[static_cast<std::size_t>(iy * res_x + ix)] = v;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(threads, int(res_y)));
    if (workers == 1) {
        fill_rows(0, res_y);
    } else {
        std::vector<std::thread> pool;
        const Index chunk = (res_y + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const Index begin = Index(t) * chunk;
            const Index end = std::min(res_y, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(fill_rows, begin, end);
        }
        for (std::thread& th : pool) th.join();
    }
    return grid;
}

GrayImage feature_tile(const Vector& w, Index rows, Index cols) {
    if (rows < 1 || cols < 1 || w.size() != rows * cols) {
        throw std::invalid_argument("feature_tile: shape mismatch");
    }
    GrayImage img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.resize(static_cast<std::size_t>(rows * cols));
    const double lo = w.minCoeff();
    const double hi = w.maxCoeff();
    if (!(hi > lo)) {
        std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t(128));
        return img;
    }
    const double span = hi - lo;
    for (Index i = 0; i < w.size(); ++i) {
        const double v = (w[i] - lo) / span * 255.0;
        img.pixels[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(std::lround(v));
    }
    return img;
}

namespace {

void blit(GrayImage& dst, const GrayImage& tile, Index row0, Index col0) {
    for (Index r = 0; r < tile.rows; ++r) {
        const std::uint8_t* src =
            tile.pixels.data() + static_cast<std::size_t>(r * tile.cols);
        std::uint8_t* out = dst.pixels.data() +
                            static_cast<std::size_t>((row0 + r) * dst.cols + col0);
        std::copy(src, src + tile.cols, out);
    }
}

}  // namespace

GrayImage tile_montage(const Matrix& weights, Index rows, Index cols,
                       const std::vector<Index>& order) {
    if (order.empty()) throw std::invalid_argument("tile_montage: empty selection");
    if (weights.cols() != rows * cols) {
        throw std::invalid_argument("tile_montage: shape mismatch");
    }
    for (Index j : order) {
        if (j < 0 || j >= weights.rows()) {
            throw std::invalid_argument("tile_montage: feature index out of range");
        }
    }
    const Index count = static_cast<Index>(order.size());
    const Index grid_cols = static_cast<Index>(
        std::ceil(std::sqrt(double(count))));
    const Index grid_rows = (count + grid_cols - 1) / grid_cols;

    GrayImage img;
    img.rows = grid_rows * rows;
    img.cols = grid_cols * cols;
    img.pixels.assign(static_cast<std::size_t>(img.rows * img.cols), 0);
    for (Index t = 0; t < count; ++t) {
        const GrayImage tile = feature_tile(
            weights.row(order[static_cast<std::size_t>(t)]).transpose(), rows, cols);
        blit(img, tile, (t / grid_cols) * rows, (t % grid_cols) * cols);
    }
    return img;
}

GrayImage feature_tiles(const Model& model, Index rows, Index cols) {
    const Layer& layer = single_layer(model, "feature_tiles");
    return tile_montage(layer.weights, rows, cols, descending_bias_order(layer));
}

GrayImage pair_tiles(const Model& model, Index rows, Index cols, Index top) {
    const Layer& layer = single_layer(model, "pair_tiles");
    if (top < 1) throw std::invalid_argument("pair_tiles: top must be positive");
    const std::vector<Index> order = descending_bias_order(layer);
    const Index count = std::min<Index>(top, layer.out_dim());

    GrayImage img;
    img.rows = count * rows;
    img.cols = 2 * cols;
    img.pixels.assign(static_cast<std::size_t>(img.rows * img.cols), 0);
    for (Index t = 0; t < count; ++t) {
        const Index j = order[static_cast<std::size_t>(t)];
        const Index partner = negative_pair(model, j).first;
        blit(img, feature_tile(layer.weights.row(j).transpose(), rows, cols),
             t * rows, 0);
        blit(img, feature_tile(layer.weights.row(partner).transpose(), rows, cols),
             t * rows, cols);
    }
    return img;
}

std::vector<PairingEntry> pairing_report(const Model& model) {
    const Layer& layer = single_layer(model, "pairing_report");
    std::vector<PairingEntry> report;
    for (Index j : descending_bias_order(layer)) {
        const auto [partner, dot] = negative_pair(model, j);
        PairingEntry entry;
        entry.feature = j;
        entry.pair = partner;
        entry.dot = dot;
        const double denom =
            layer.weights.row(j).norm() * layer.weights.row(partner).norm();
        entry.cosine = denom > 0.0 ? dot / denom : 0.0;
        entry.bias = layer.bias[j];
        report.push_back(entry);
    }
    return report;
}

Json pairing_report_to_json(const std::vector<PairingEntry>& report) {
    Json arr = Json::array();
    for (const PairingEntry& e : report) {
        Json row;
        row["feature"] = e.feature;
        row["pair"] = e.pair;
        row["dot"] = e.dot;
        row["cosine"] = e.cosine;
        row["bias"] = e.bias;
        arr.push_back(row);
    }
    Json doc;
    doc["format_version"] = 1;
    doc["kind"] = "pairing_report";
    doc["entries"] = arr;
    return doc;
}

void write_pgm(const GrayImage& image, const std::string& path) {
    if (image.rows < 1 || image.cols < 1 ||
        image.pixels.size() != static_cast<std::size_t>(image.rows * image.cols)) {
        throw std::invalid_argument("write_pgm: malformed image");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw DataError("write failed: " + path);
}

void write_grid_csv(const ResponseGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "x,y,value\n";
    for (Index iy = 0; iy < grid.res_y; ++iy) {
        const double y = grid_coordinate(grid.y_min, grid.y_max, iy, grid.res_y);
        for (Index ix = 0; ix < grid.res_x; ++ix) {
            const double x = grid_coordinate(grid.x_min, grid.x_max, ix, grid.res_x);
            out << g17(x) << ',' << g17(y) << ','
                << g17(grid.values[static_cast<std::size_t>(iy * grid.res_x + ix)])
                << '\n';
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

namespace {

// Polygon where plane normal.p + offset = 0 meets the box [lo, hi]: intersect
// the 12 edges, drop duplicates, and order the survivors by angle about their
// centroid in an in-plane basis.
std::vector<Vector> clip_plane_to_box(const Plane& plane, const Vector& lo,
                                      const Vector& hi) {
    static const int edges[12][2] = {{0, 1}, {0, 2}, {0, 4}, {1, 3},
                                     {1, 5}, {2, 3}, {2, 6}, {3, 7},
                                     {4, 5}, {4, 6}, {5, 7}, {6, 7}};
    auto corner = [&](int mask) {
        Vector v(3);
        v[0] = (mask & 1) ? hi[0] : lo[0];
        v[1] = (mask & 2) ? hi[1] : lo[1];
        v[2] = (mask & 4) ? hi[2] : lo[2];
        return v;
    };
    std::vector<Vector> points;
    for (const auto& e : edges) {
        const Vector a = corner(e[0]);
        const Vector b = corner(e[1]);
        const double fa = plane.normal.dot(a) + plane.offset;
        const double fb = plane.normal.dot(b) + plane.offset;
        if ((fa > 0.0 && fb > 0.0) || (fa < 0.0 && fb < 0.0)) continue;
        if (fa == fb) continue;  // edge lies parallel in the plane's level set
        const double t = fa / (fa - fb);
        Vector p = a + t * (b - a);
        bool duplicate = false;
        for (const Vector& q : points) {
            if ((p - q).lpNorm<Eigen::Infinity>() < 1e-12) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) points.push_back(std::move(p));
    }
    if (points.size() < 3) return {};

    Vector centroid = Vector::Zero(3);
    for (const Vector& p : points) centroid += p;
    centroid /= double(points.size());

    // In-plane orthonormal basis.
    const Vector n = plane.normal.normalized();
    Vector seed = std::abs(n[0]) < 0.9 ? Vector(Vector::Unit(3, 0))
                                       : Vector(Vector::Unit(3, 1));
    Vector e1 = (seed - n.dot(seed) * n).normalized();
    Vector e2(3);
    e2[0] = n[1] * e1[2] - n[2] * e1[1];
    e2[1] = n[2] * e1[0] - n[0] * e1[2];
    e2[2] = n[0] * e1[1] - n[1] * e1[0];

    std::vector<std::pair<double, Vector>> angled;
    for (Vector& p : points) {
        const Vector d = p - centroid;
        angled.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), std::move(p));
    }
    std::sort(angled.begin(), angled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vector> polygon;
    for (auto& [angle, p] : angled) polygon.push_back(std::move(p));
    return polygon;
}

}  // namespace

void write_planes_obj(const PlaneSet& set, const Vector& lo, const Vector& hi,
                      const std::string& path) {
    if (lo.size() != 3 || hi.size() != 3) {
        throw std::invalid_argument("write_planes_obj: box must be 3D");
    }
    for (int a = 0; a < 3; ++a) {
        if (!(lo[a] <= hi[a])) {
            throw std::invalid_argument("write_planes_obj: box bounds must be ordered");
        }
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "# feature hyperplanes clipped to the data bounding box\n";
    Index next_vertex = 1;
    for (const Plane& plane : set.planes) {
        if (plane.normal.size() != 3) {
            throw std::invalid_argument("write_planes_obj: planes must be 3D");
        }
        const std::vector<Vector> polygon = clip_plane_to_box(plane, lo, hi);
        if (polygon.empty()) continue;
        out << "o feature_" << plane.feature_index << '\n';
        for (const Vector& p : polygon) {
            out << "v " << g17(p[0]) << ' ' << g17(p[1]) << ' ' << g17(p[2]) << '\n';
        }
        out << 'f';
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            out << ' ' << (next_vertex + static_cast<Index>(i));
        }
        out << '\n';
        next_vertex += static_cast<Index>(polygon.size());
    }
    if (!out) throw DataError("write failed: " + path);
}

void write_planes_csv(const PlaneSet& set, double x_min, double x_max,
                      double y_min, double y_max, const std::string& path) {
    if (!(x_min <= x_max) || !(y_min <= y_max)) {
        throw std::invalid_argument("write_planes_csv: bounds must be ordered");
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "feature,x0,y0,x1,y1\n";
    for (const Plane& plane : set.planes) {
        if (plane.normal.size() != 2) {
            throw std::invalid_argument("write_planes_csv: planes must be 2D");
        }
        // March along the line from its anchor and clip to the rectangle.
        const Vector& n = plane.normal;
        Vector dir(2);
        dir[0] = -n[1];
        dir[1] = n[0];
        const Vector& a = plane.anchor;
        double t0 = -std::numeric_limits<double>::infinity();
        double t1 = std::numeric_limits<double>::infinity();
        bool empty = false;
        const double los[2] = {x_min, y_min};
        const double his[2] = {x_max, y_max};
        for (int axis = 0; axis < 2; ++axis) {
            if (dir[axis] == 0.0) {
                if (a[axis] < los[axis] || a[axis] > his[axis]) empty = true;
                continue;
            }
            double ta = (los[axis] - a[axis]) / dir[axis];
            double tb = (his[axis] - a[axis]) / dir[axis];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        if (empty || !(t0 <= t1) || !std::isfinite(t0) || !std::isfinite(t1)) {
            continue;
        }
        const Vector p0 = a + t0 * dir;
        const Vector p1 = a + t1 * dir;
        out << plane.feature_index << ',' << g17(p0[0]) << ',' << g17(p0[1]) << ','
            << g17(p1[0]) << ',' << g17(p1[1]) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace switchcode
