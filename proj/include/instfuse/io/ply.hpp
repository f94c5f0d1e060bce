// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "instfuse/point_cloud.hpp"

namespace instfuse {

namespace detail {

enum class PlyScalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline PlyScalar ply_scalar_from_name(const std::string& name) {
  if (name == "char" || name == "int8") return PlyScalar::i8;
  if (name == "uchar" || name == "uint8") return PlyScalar::u8;
  if (name == "short" || name == "int16") return PlyScalar::i16;
  if (name == "ushort" || name == "uint16") return PlyScalar::u16;
  if (name == "int" || name == "int32") return PlyScalar::i32;
  if (name == "uint" || name == "uint32") return PlyScalar::u32;
  if (name == "float" || name == "float32") return PlyScalar::f32;
  if (name == "double" || name == "float64") return PlyScalar::f64;
  throw std::runtime_error("ply: malformed header (unknown type '" + name + "')");
}

inline std::size_t ply_scalar_size(PlyScalar t) {
  switch (t) {
    case PlyScalar::i8:
    case PlyScalar::u8: return 1;
    case PlyScalar::i16:
    case PlyScalar::u16: return 2;
    case PlyScalar::i32:
    case PlyScalar::u32:
    case PlyScalar::f32: return 4;
    case PlyScalar::f64: return 8;
  }
  return 0;
}

/// Decode one little-endian scalar starting at `p` (bounds already checked).
inline double ply_decode(PlyScalar t, const unsigned char* p) {
  auto u16 = [&] { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); };
  auto u32 = [&] {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  };
  auto u64 = [&] {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  };
  switch (t) {
    case PlyScalar::i8: return static_cast<double>(static_cast<std::int8_t>(p[0]));
    case PlyScalar::u8: return static_cast<double>(p[0]);
    case PlyScalar::i16: return static_cast<double>(static_cast<std::int16_t>(u16()));
    case PlyScalar::u16: return static_cast<double>(u16());
    case PlyScalar::i32: return static_cast<double>(static_cast<std::int32_t>(u32()));
    case PlyScalar::u32: return static_cast<double>(u32());
    case PlyScalar::f32: return static_cast<double>(std::bit_cast<float>(u32()));
    case PlyScalar::f64: return std::bit_cast<double>(u64());
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyScalar type = PlyScalar::f32;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

}  // namespace detail

/// Read a point cloud from a PLY file (ascii or binary little-endian).
/// The vertex element must provide x/y/z and red/green/blue; a scalar
/// `label` property, when present, is loaded as ground-truth instance ids.
/// Unknown vertex properties and trailing elements (faces etc.) are skipped.
inline PointCloud load_ply(const std::string& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ply: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ply: malformed header (empty file)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw std::runtime_error("ply: malformed header (missing magic)");

  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    if (!std::getline(in, line))
      throw std::runtime_error("ply: malformed header (missing end_header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw std::runtime_error("ply: malformed header (unsupported format '" + fmt + "')");
      have_format = true;
    } else if (word == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count))
        throw std::runtime_error("ply: malformed header (bad element line)");
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty())
        throw std::runtime_error("ply: malformed header (property before element)");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        if (!(ls >> count_type >> item_type >> p.name))
          throw std::runtime_error("ply: malformed header (bad list property)");
        p.is_list = true;
        p.count_type = ply_scalar_from_name(count_type);
        p.type = ply_scalar_from_name(item_type);
      } else {
        if (!(ls >> p.name))
          throw std::runtime_error("ply: malformed header (bad property line)");
        p.type = ply_scalar_from_name(type);
      }
      elements.back().properties.push_back(p);
    } else if (word == "end_header") {
      break;
    } else {
      throw std::runtime_error("ply: malformed header (unexpected '" + word + "')");
    }
  }
  if (!have_format) throw std::runtime_error("ply: malformed header (missing format)");

  PointCloud cloud;
  bool vertex_seen = false;
  std::vector<unsigned char> buffer;
  std::size_t offset = 0;
  if (binary) {
    buffer.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  for (const PlyElement& elem : elements) {
    const bool is_vertex = elem.name == "vertex" && !vertex_seen;
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, il = -1;
    if (is_vertex) {
      vertex_seen = true;
      if (elem.count == 0) throw std::runtime_error("ply: empty cloud in " + path);
      for (std::size_t p = 0; p < elem.properties.size(); ++p) {
        const PlyProperty& prop = elem.properties[p];
        if (prop.is_list) continue;
        const int idx = static_cast<int>(p);
        if (prop.name == "x") ix = idx;
        else if (prop.name == "y") iy = idx;
        else if (prop.name == "z") iz = idx;
        else if (prop.name == "red") ir = idx;
        else if (prop.name == "green") ig = idx;
        else if (prop.name == "blue") ib = idx;
        else if (prop.name == "label") il = idx;
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw std::runtime_error("ply: missing position property in " + path);
      if (ir < 0 || ig < 0 || ib < 0)
        throw std::runtime_error("ply: missing color property in " + path);
      cloud.positions.reserve(elem.count);
      cloud.colors.reserve(elem.count);
      if (il >= 0) cloud.gt_labels.reserve(elem.count);
    } else if (vertex_seen) {
      break;  // trailing elements (faces etc.) are not needed
    }

    std::vector<double> row(elem.properties.size(), 0.0);
    for (std::size_t r = 0; r < elem.count; ++r) {
      for (std::size_t p = 0; p < elem.properties.size(); ++p) {
        const PlyProperty& prop = elem.properties[p];
        if (binary) {
          if (prop.is_list) {
            const std::size_t csz = ply_scalar_size(prop.count_type);
            if (offset + csz > buffer.size())
              throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
            const auto items = static_cast<std::size_t>(ply_decode(prop.count_type, &buffer[offset]));
            offset += csz + items * ply_scalar_size(prop.type);
            if (offset > buffer.size())
              throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
          } else {
            const std::size_t sz = ply_scalar_size(prop.type);
            if (offset + sz > buffer.size())
              throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
            row[p] = ply_decode(prop.type, &buffer[offset]);
            offset += sz;
          }
        } else {
          if (prop.is_list) {
            std::size_t items = 0;
            if (!(in >> items))
              throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
            double tmp;
            for (std::size_t k = 0; k < items; ++k)
              if (!(in >> tmp))
                throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
          } else {
            if (!(in >> row[p]))
              throw std::runtime_error("ply: count mismatch (truncated data) in " + path);
          }
        }
      }
      if (is_vertex) {
        cloud.positions.emplace_back(row[static_cast<std::size_t>(ix)],
                                     row[static_cast<std::size_t>(iy)],
                                     row[static_cast<std::size_t>(iz)]);
        cloud.colors.emplace_back(row[static_cast<std::size_t>(ir)] / 255.0,
                                  row[static_cast<std::size_t>(ig)] / 255.0,
                                  row[static_cast<std::size_t>(ib)] / 255.0);
        if (il >= 0) cloud.gt_labels.push_back(static_cast<int>(row[static_cast<std::size_t>(il)]));
      }
    }
  }
  if (!vertex_seen) throw std::runtime_error("ply: malformed header (no vertex element)");
  return cloud;
}

namespace detail {

inline void put_u16_le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32_le(std::string& out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

inline unsigned char to_byte(double channel) {
  const double scaled = std::floor(channel * 255.0 + 0.5);
  return static_cast<unsigned char>(std::min(255.0, std::max(0.0, scaled)));
}

}  // namespace detail

/// Write a binary little-endian PLY. When `labels` is non-null it must have
/// one entry per point and is stored as an int `label` property.
inline void save_ply(const PointCloud& cloud, const std::string& path,
                     const std::vector<int>* labels = nullptr) {
  if (cloud.size() == 0) throw std::runtime_error("ply: empty cloud");
  if (cloud.colors.size() != cloud.size())
    throw std::runtime_error("ply: cloud has no colors to write");
  if (labels != nullptr && labels->size() != cloud.size())
    throw std::runtime_error("ply: label count mismatch");

  std::string body;
  body.reserve(cloud.size() * (15 + (labels != nullptr ? 4 : 0)));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    detail::put_f32_le(body, static_cast<float>(cloud.positions[i].x()));
    detail::put_f32_le(body, static_cast<float>(cloud.positions[i].y()));
    detail::put_f32_le(body, static_cast<float>(cloud.positions[i].z()));
    body.push_back(static_cast<char>(detail::to_byte(cloud.colors[i].x())));
    body.push_back(static_cast<char>(detail::to_byte(cloud.colors[i].y())));
    body.push_back(static_cast<char>(detail::to_byte(cloud.colors[i].z())));
    if (labels != nullptr)
      detail::put_u32_le(body, static_cast<std::uint32_t>((*labels)[i]));
  }

  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << cloud.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (labels != nullptr) header << "property int label\n";
  header << "end_header\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("ply: cannot write " + path);
  out << header.str();
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("ply: write failed for " + path);
}

}  // namespace instfuse
