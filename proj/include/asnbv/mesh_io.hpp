#pragma once

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asnbv/geometry.hpp"

namespace asnbv {

namespace detail {

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

inline double read_ply_scalar(std::istream& in, const std::string& type) {
  if (type == "float" || type == "float32") return read_le<float>(in);
  if (type == "double" || type == "float64") return read_le<double>(in);
  if (type == "uchar" || type == "uint8") return read_le<std::uint8_t>(in);
  if (type == "char" || type == "int8") return read_le<std::int8_t>(in);
  if (type == "ushort" || type == "uint16") return read_le<std::uint16_t>(in);
  if (type == "short" || type == "int16") return read_le<std::int16_t>(in);
  if (type == "uint" || type == "uint32") return read_le<std::uint32_t>(in);
  if (type == "int" || type == "int32") return read_le<std::int32_t>(in);
  throw std::runtime_error("ply: unsupported property type " + type);
}

inline void fan_triangulate(const std::vector<int>& face, TriangleMesh& mesh) {
  for (std::size_t i = 1; i + 1 < face.size(); ++i)
    mesh.triangles.push_back({face[0], face[int(i)], face[int(i) + 1]});
}

}  // namespace detail

/// Loads ASCII or binary_little_endian PLY. Only vertex positions and face
/// index lists are used; polygons are fan-triangulated.
inline TriangleMesh load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw std::runtime_error("not a ply file: " + path);

  enum Format { kAscii, kBinaryLE } format = kAscii;
  struct Property {
    std::string type;
    std::string name;
    bool is_list = false;
    std::string count_type, item_type;
  };
  struct Element {
    std::string name;
    long count = 0;
    std::vector<Property> props;
  };
  std::vector<Element> elements;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") format = kAscii;
      else if (fmt == "binary_little_endian") format = kBinaryLE;
      else throw std::runtime_error("ply: unsupported format " + fmt);
    } else if (tok == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tok == "property") {
      if (elements.empty()) throw std::runtime_error("ply: property before element");
      Property p;
      ls >> p.type;
      if (p.type == "list") {
        p.is_list = true;
        ls >> p.count_type >> p.item_type >> p.name;
      } else {
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  for (const auto& elem : elements) {
    const bool is_vertex = elem.name == "vertex";
    const bool is_face = elem.name == "face";
    for (long i = 0; i < elem.count; ++i) {
      double x = 0, y = 0, z = 0;
      std::vector<int> face;
      if (format == kAscii) {
        std::getline(in, line);
        std::istringstream ls(line);
        for (const auto& p : elem.props) {
          if (p.is_list) {
            int n = 0;
            ls >> n;
            face.resize(n);
            for (int& v : face) ls >> v;
          } else {
            double v = 0;
            ls >> v;
            if (p.name == "x") x = v;
            else if (p.name == "y") y = v;
            else if (p.name == "z") z = v;
          }
        }
      } else {
        for (const auto& p : elem.props) {
          if (p.is_list) {
            const int n = int(detail::read_ply_scalar(in, p.count_type));
            face.resize(n);
            for (int& v : face) v = int(detail::read_ply_scalar(in, p.item_type));
          } else {
            const double v = detail::read_ply_scalar(in, p.type);
            if (p.name == "x") x = v;
            else if (p.name == "y") y = v;
            else if (p.name == "z") z = v;
          }
        }
      }
      if (is_vertex) mesh.vertices.emplace_back(x, y, z);
      else if (is_face) detail::fan_triangulate(face, mesh);
    }
  }
  if (!in) throw std::runtime_error("ply: truncated file " + path);
  mesh.finalize();
  return mesh;
}

/// Loads a Wavefront OBJ (v and f records; 1-based and negative indices,
/// v/vt/vn forms). Polygons are fan-triangulated.
inline TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh: " + path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw std::runtime_error("obj: malformed vertex: " + line);
      mesh.vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<int> face;
      std::string ref;
      while (ls >> ref) {
        const std::size_t slash = ref.find('/');
        const int raw = std::stoi(slash == std::string::npos ? ref : ref.substr(0, slash));
        const int idx = raw > 0 ? raw - 1 : int(mesh.vertices.size()) + raw;
        face.push_back(idx);
      }
      if (face.size() < 3) throw std::runtime_error("obj: face with < 3 vertices: " + line);
      detail::fan_triangulate(face, mesh);
    }
  }
  mesh.finalize();
  return mesh;
}

/// Dispatches on the file extension (.ply / .obj).
inline TriangleMesh load_mesh(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "ply" || ext == "PLY") return load_ply(path);
  if (ext == "obj" || ext == "OBJ") return load_obj(path);
  throw std::runtime_error("unsupported mesh format: " + path);
}

inline void save_ply(const TriangleMesh& mesh, const std::string& path, bool binary = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mesh: " + path);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii")
      << " 1.0\nelement vertex " << mesh.vertices.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face "
      << mesh.triangles.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  if (binary) {
    for (const auto& v : mesh.vertices) {
      const float xyz[3] = {float(v.x()), float(v.y()), float(v.z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& t : mesh.triangles) {
      const std::uint8_t n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      const std::int32_t idx[3] = {t[0], t[1], t[2]};
      out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  } else {
    char buf[96];
    for (const auto& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x(), v.y(), v.z());
      out << buf;
    }
    for (const auto& t : mesh.triangles)
      out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

}  // namespace asnbv
