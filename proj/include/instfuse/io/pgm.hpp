// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "instfuse/affinity.hpp"
#include "instfuse/camera.hpp"

namespace instfuse {

namespace detail {

/// Read one PGM header token, skipping whitespace and '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

}  // namespace detail

struct Pgm16 {
  int width = 0, height = 0;
  std::vector<std::uint16_t> values;  // row-major from the top-left
};

/// Load a binary (P5) PGM with maxval 65535; samples are big-endian 16-bit.
inline Pgm16 load_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot open " + path);
  if (detail::pgm_token(in) != "P5") throw std::runtime_error("pgm: not a P5 file: " + path);
  Pgm16 img;
  try {
    img.width = std::stoi(detail::pgm_token(in));
    img.height = std::stoi(detail::pgm_token(in));
    const int maxval = std::stoi(detail::pgm_token(in));
    if (maxval != 65535)
      throw std::runtime_error("pgm: expected 16-bit maxval 65535 in " + path);
  } catch (const std::logic_error&) {
    throw std::runtime_error("pgm: malformed header in " + path);
  }
  if (img.width <= 0 || img.height <= 0)
    throw std::runtime_error("pgm: malformed header in " + path);
  // pgm_token consumed exactly one whitespace byte after maxval: data starts here
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(n * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw std::runtime_error("pgm: truncated data in " + path);
  img.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.values[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return img;
}

inline void save_pgm16(const Pgm16& img, const std::string& path) {
  if (img.values.size() != static_cast<std::size_t>(img.width) * img.height)
    throw std::runtime_error("pgm: size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("pgm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  std::string data;
  data.reserve(img.values.size() * 2);
  for (std::uint16_t v : img.values) {
    data.push_back(static_cast<char>((v >> 8) & 0xff));
    data.push_back(static_cast<char>(v & 0xff));
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

/// Depth maps are stored in millimetres; 0 marks invalid pixels.
inline DepthRaster load_depth_pgm(const std::string& path) {
  const Pgm16 img = load_pgm16(path);
  DepthRaster d;
  d.width = img.width;
  d.height = img.height;
  d.values.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i)
    d.values[i] = static_cast<double>(img.values[i]) / 1000.0;
  return d;
}

inline void save_depth_pgm(const DepthRaster& depth, const std::string& path) {
  Pgm16 img;
  img.width = depth.width;
  img.height = depth.height;
  img.values.resize(depth.values.size());
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const double mm = std::floor(depth.values[i] * 1000.0 + 0.5);
    img.values[i] = static_cast<std::uint16_t>(std::min(65535.0, std::max(0.0, mm)));
  }
  save_pgm16(img, path);
}

/// Mask rasters store 2D instance ids directly; 0 marks unlabeled pixels.
inline MaskRaster load_mask_pgm(const std::string& path) {
  const Pgm16 img = load_pgm16(path);
  MaskRaster m;
  m.width = img.width;
  m.height = img.height;
  m.ids = img.values;
  return m;
}

inline void save_mask_pgm(const MaskRaster& mask, const std::string& path) {
  Pgm16 img;
  img.width = mask.width;
  img.height = mask.height;
  img.values = mask.ids;
  save_pgm16(img, path);
}

}  // namespace instfuse
