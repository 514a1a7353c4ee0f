// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Binary PGM (P5, maxval 255) reading and writing, plus the JSON sidecar that
// carries capture metadata next to each image.

#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "autocam/error.hpp"
#include "autocam/image.hpp"

namespace autocam {

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
}

inline int read_pnm_int(std::istream& in, const std::string& path) {
  skip_pnm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw Error(Errc::CorruptImage, path + ": malformed PGM header");
  return v;
}

}  // namespace detail

/// Parses a P5 stream. Metadata is left at defaults; see load_image().
inline Image decode_pgm(std::istream& in, const std::string& name = "<stream>") {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw Error(Errc::CorruptImage, name + ": not a binary PGM (P5) file");
  }
  const int w = detail::read_pnm_int(in, name);
  const int h = detail::read_pnm_int(in, name);
  const int maxval = detail::read_pnm_int(in, name);
  if (maxval != 255) throw Error(Errc::CorruptImage, name + ": only maxval 255 is supported");
  // Exactly one whitespace byte separates the header from the raster.
  if (!std::isspace(in.get())) throw Error(Errc::CorruptImage, name + ": malformed PGM header");
  if (w <= 0 || h <= 0) throw Error(Errc::CorruptImage, name + ": empty raster");

  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw Error(Errc::CorruptImage, name + ": truncated raster");
  }
  try {
    return Image(w, h, std::move(data));
  } catch (const Error& e) {
    throw Error(Errc::CorruptImage, name + ": " + e.what());
  }
}

inline void encode_pgm(std::ostream& out, const Image& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.size()));
}

inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return decode_pgm(in, path.string());
}

inline void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  encode_pgm(out, img);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline nlohmann::ordered_json meta_to_json(const CaptureMeta& meta) {
  nlohmann::ordered_json j;
  j["exposure_ms"] = meta.exposure_ms;
  j["gain_db"] = meta.gain_db;
  j["source"] = std::string(to_string(meta.source));
  if (meta.lux) j["lux"] = *meta.lux;
  return j;
}

inline CaptureMeta meta_from_json(const nlohmann::json& j, const std::string& name = "<sidecar>") {
  try {
    CaptureMeta meta;
    meta.exposure_ms = j.at("exposure_ms").get<double>();
    meta.gain_db = j.at("gain_db").get<double>();
    meta.source = source_from_string(j.at("source").get<std::string>());
    if (j.contains("lux") && !j.at("lux").is_null()) meta.lux = j.at("lux").get<double>();
    if (!(meta.exposure_ms > 0.0) || meta.gain_db < 0.0) {
      throw Error(Errc::InvalidArgument, "exposure_ms must be > 0 and gain_db >= 0");
    }
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptImage, name + ": bad sidecar: " + e.what());
  } catch (const Error& e) {
    throw Error(Errc::CorruptImage, name + ": bad sidecar: " + e.what());
  }
}

/// Sidecar path for an image: `<name>.json` next to `<name>.pgm`.
inline std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".json");
  return p;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes `<stem>.pgm` and its `<stem>.json` sidecar.
inline void save_image(const std::filesystem::path& image_path, const Image& img) {
  write_pgm(image_path, img);
  write_text_file(sidecar_path(image_path), meta_to_json(img.meta()).dump(2) + "\n");
}

/// Reads a PGM together with its required sidecar.
inline Image load_image(const std::filesystem::path& image_path) {
  Image img = read_pgm(image_path);
  const auto side = sidecar_path(image_path);
  if (!std::filesystem::exists(side)) {
    throw Error(Errc::MissingSidecar, "missing sidecar " + side.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(side));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptImage, side.string() + ": " + e.what());
  }
  img.meta() = meta_from_json(j, side.string());
  return img;
}

}  // namespace autocam
