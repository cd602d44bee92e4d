#pragma once

#include "shapelift/types.hpp"

#include <string>

namespace shapelift::io {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Landmarks CSV: one row per landmark, columns `x,y,visible` with visible in
/// {0,1}; a leading header row is optional on input and always written.
LandmarkSet2D read_landmarks_csv(const std::string& path);
void write_landmarks_csv(const std::string& path, const LandmarkSet2D& landmarks);

/// Shape CSV: one row per landmark, columns `x,y,z`; header optional on
/// input, always written.
Shape3D read_shape_csv(const std::string& path);
void write_shape_csv(const std::string& path, const Shape3D& shape);

/// Dictionary JSON: format_version, k, p, row-major 3 x p base matrices, and
/// optional landmark labels.
ShapeDictionary read_dictionary_json(const std::string& path);
void write_dictionary_json(const std::string& path, const ShapeDictionary& dict);

}  // namespace shapelift::io
