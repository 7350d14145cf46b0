#pragma once

#include <json.hpp>

#include "switchcode/common.hpp"

namespace switchcode {

using Json = nlohmann::json;

inline Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Vector vector_from_json(const Json& arr) {
    if (!arr.is_array()) throw DataError("expected a JSON array of numbers");
    Vector v(static_cast<Index>(arr.size()));
    for (Index i = 0; i < v.size(); ++i) {
        v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

/// Matrices are stored flat in row-major order next to explicit shape fields.
inline Json matrix_to_json(const Matrix& m) {
    Json arr = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    }
    return arr;
}

inline Matrix matrix_from_json(const Json& arr, Index rows, Index cols) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols) {
        throw DataError("matrix payload does not match its shape fields");
    }
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = arr[idx++].get<double>();
    }
    return m;
}

}  // namespace switchcode
