#include "shapelift/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace shapelift::io {
namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool try_parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc()) return false;
  for (const char* q = ptr; q < end; ++q) {
    if (*q != ' ' && *q != '\t') return false;
  }
  return true;
}

// All data lines of a CSV file with the given column count; an unparseable
// leading line is treated as a header and skipped.
std::vector<std::vector<double>> read_csv_rows(const std::string& path,
                                               std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = fields.size() == columns;
    for (std::size_t i = 0; numeric && i < fields.size(); ++i) {
      numeric = try_parse_double(fields[i], row[i]);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::invalid_argument("malformed CSV row in " + path + ": " + line);
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

LandmarkSet2D read_landmarks_csv(const std::string& path) {
  const auto rows = read_csv_rows(path, 3);
  if (rows.empty()) throw std::invalid_argument("no landmarks in " + path);

  Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(rows.size()));
  VisibilityMask vis(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    pts(0, col) = rows[i][0];
    pts(1, col) = rows[i][1];
    if (rows[i][2] != 0.0 && rows[i][2] != 1.0) {
      throw std::invalid_argument("visibility must be 0 or 1 in " + path);
    }
    vis[col] = rows[i][2] != 0.0;
  }
  return {std::move(pts), std::move(vis)};
}

void write_landmarks_csv(const std::string& path, const LandmarkSet2D& landmarks) {
  if (landmarks.visibility.size() != landmarks.landmark_count()) {
    throw std::invalid_argument("visibility mask size mismatch");
  }
  std::ofstream out = open_output(path);
  out << "x,y,visible\n";
  for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i) {
    out << format_double(landmarks.points(0, i)) << ','
        << format_double(landmarks.points(1, i)) << ','
        << (landmarks.visibility[i] ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

Shape3D read_shape_csv(const std::string& path) {
  const auto rows = read_csv_rows(path, 3);
  if (rows.empty()) throw std::invalid_argument("no points in " + path);

  Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    pts(0, col) = rows[i][0];
    pts(1, col) = rows[i][1];
    pts(2, col) = rows[i][2];
  }
  return Shape3D(std::move(pts));
}

void write_shape_csv(const std::string& path, const Shape3D& shape) {
  std::ofstream out = open_output(path);
  out << "x,y,z\n";
  for (Eigen::Index i = 0; i < shape.landmark_count(); ++i) {
    out << format_double(shape.points(0, i)) << ','
        << format_double(shape.points(1, i)) << ','
        << format_double(shape.points(2, i)) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

ShapeDictionary read_dictionary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);

  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }

  try {
    if (j.at("format_version").get<int>() != 1) {
      throw std::invalid_argument("unsupported format_version in " + path);
    }
    const auto k = j.at("k").get<Eigen::Index>();
    const auto p = j.at("p").get<Eigen::Index>();
    const auto& bases = j.at("bases");
    if (k < 1 || p < 3 || static_cast<Eigen::Index>(bases.size()) != k) {
      throw std::invalid_argument("inconsistent dictionary sizes in " + path);
    }

    ShapeDictionary dict;
    dict.bases.reserve(bases.size());
    for (const auto& flat : bases) {
      if (static_cast<Eigen::Index>(flat.size()) != 3 * p) {
        throw std::invalid_argument("basis size mismatch in " + path);
      }
      Eigen::Matrix3Xd b(3, p);
      Eigen::Index idx = 0;
      for (Eigen::Index r = 0; r < 3; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) b(r, c) = flat[idx++].get<double>();
      }
      dict.bases.emplace_back(std::move(b));
    }
    if (j.contains("labels")) {
      dict.labels = j.at("labels").get<std::vector<std::string>>();
    }
    dict.validate();
    return dict;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed dictionary in " + path + ": " + e.what());
  }
}

void write_dictionary_json(const std::string& path, const ShapeDictionary& dict) {
  dict.validate();
  json j;
  j["format_version"] = 1;
  j["k"] = dict.size();
  j["p"] = dict.landmark_count();
  json bases = json::array();
  for (const Shape3D& b : dict.bases) {
    json flat = json::array();
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < b.landmark_count(); ++c) flat.push_back(b.points(r, c));
    }
    bases.push_back(std::move(flat));
  }
  j["bases"] = std::move(bases);
  if (!dict.labels.empty()) j["labels"] = dict.labels;

  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write file: " + path);
}

}  // namespace shapelift::io
