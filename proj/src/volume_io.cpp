#include "lungsim/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <png.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lungsim {
namespace {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

struct MetaHeader {
  std::map<std::string, std::string> keys;
  std::streamoff payload_offset = 0;  // for ElementDataFile = LOCAL
};

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

MetaHeader read_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, path.string(), "cannot open MetaImage header");
  MetaHeader h;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (trim(line).empty()) continue;
      throw Error(ErrorKind::format, trim(line), "header line without '='");
    }
    const auto key = trim(line.substr(0, eq));
    h.keys[key] = trim(line.substr(eq + 1));
    if (key == "ElementDataFile") {
      h.payload_offset = in.tellg();
      break;
    }
  }
  return h;
}

const std::string& require(const MetaHeader& h, const std::string& key) {
  auto it = h.keys.find(key);
  if (it == h.keys.end()) throw Error(ErrorKind::format, key, "required MetaImage key missing");
  return it->second;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text, std::size_t expected) {
  std::istringstream ss(text);
  std::vector<T> out;
  T v;
  while (ss >> v) out.push_back(v);
  if (!ss.eof() || out.size() != expected)
    throw Error(ErrorKind::format, key, "expected " + std::to_string(expected) + " values, got '" + text + "'");
  return out;
}

bool parse_bool(const MetaHeader& h, const std::string& key) {
  auto it = h.keys.find(key);
  if (it == h.keys.end()) return false;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorKind::format, key, "expected True or False, got '" + it->second + "'");
}

struct ElementType {
  std::size_t bytes;
  bool is_signed;
  bool is_float;
};

ElementType element_type(const std::string& name) {
  static const std::map<std::string, ElementType> kTypes = {
      {"MET_CHAR", {1, true, false}},   {"MET_UCHAR", {1, false, false}},
      {"MET_SHORT", {2, true, false}},  {"MET_USHORT", {2, false, false}},
      {"MET_INT", {4, true, false}},    {"MET_UINT", {4, false, false}},
      {"MET_LONG", {4, true, false}},   {"MET_ULONG", {4, false, false}},
      {"MET_FLOAT", {4, true, true}},   {"MET_DOUBLE", {8, true, true}},
  };
  auto it = kTypes.find(name);
  if (it == kTypes.end()) throw Error(ErrorKind::unsupported, "ElementType", "unsupported element type '" + name + "'");
  return it->second;
}

double decode(const unsigned char* p, const ElementType& t) {
  switch (t.bytes) {
    case 1: return t.is_signed ? double(std::int8_t(p[0])) : double(p[0]);
    case 2: {
      std::uint16_t u;
      std::memcpy(&u, p, 2);
      return t.is_signed ? double(std::int16_t(u)) : double(u);
    }
    case 4: {
      std::uint32_t u;
      std::memcpy(&u, p, 4);
      if (t.is_float) return double(std::bit_cast<float>(u));
      return t.is_signed ? double(std::int32_t(u)) : double(u);
    }
    default: {
      std::uint64_t u;
      std::memcpy(&u, p, 8);
      return std::bit_cast<double>(u);
    }
  }
}

/// Grid geometry and raw decoded values, before any HU or mask conversion.
struct RawVolume {
  Vec3i dims;
  Vec3d spacing;
  Vec3d origin;
  std::vector<double> values;
  ElementType type;
};

RawVolume read_metaimage(const fs::path& path) {
  const MetaHeader h = read_header(path);
  const int ndims = [&] {
    const auto v = parse_list<int>("NDims", require(h, "NDims"), 1);
    if (v[0] != 2 && v[0] != 3) throw Error(ErrorKind::unsupported, "NDims", "only 2-D and 3-D images are supported");
    return v[0];
  }();
  if (h.keys.count("CompressedData") && parse_bool(h, "CompressedData"))
    throw Error(ErrorKind::unsupported, "CompressedData", "compressed payloads are not supported");
  if (h.keys.count("ElementNumberOfChannels") && require(h, "ElementNumberOfChannels") != "1")
    throw Error(ErrorKind::unsupported, "ElementNumberOfChannels", "only single-channel images are supported");

  RawVolume raw;
  raw.dims = Vec3i::Ones();
  raw.spacing = Vec3d::Ones();
  raw.origin = Vec3d::Zero();
  const auto dim = parse_list<long long>("DimSize", require(h, "DimSize"), ndims);
  for (int a = 0; a < ndims; ++a) {
    if (dim[a] <= 0 || dim[a] > (1 << 20)) throw Error(ErrorKind::format, "DimSize", "dimension out of range");
    raw.dims[a] = int(dim[a]);
  }
  for (const char* key : {"ElementSpacing", "ElementSize"}) {
    if (h.keys.count(key)) {
      const auto s = parse_list<double>(key, h.keys.at(key), ndims);
      for (int a = 0; a < ndims; ++a) raw.spacing[a] = s[a];
      break;
    }
  }
  if (!(raw.spacing.array() > 0.0).all() || !raw.spacing.allFinite())
    throw Error(ErrorKind::format, "ElementSpacing", "spacing must be strictly positive");
  for (const char* key : {"Offset", "Origin", "Position"}) {
    if (h.keys.count(key)) {
      const auto o = parse_list<double>(key, h.keys.at(key), ndims);
      for (int a = 0; a < ndims; ++a) raw.origin[a] = o[a];
      break;
    }
  }
  raw.type = element_type(require(h, "ElementType"));
  const bool msb = parse_bool(h, "ElementByteOrderMSB") || parse_bool(h, "BinaryDataByteOrderMSB");

  const std::string& data_file = require(h, "ElementDataFile");
  const std::size_t count = std::size_t(raw.dims.cast<long long>().prod());
  const std::size_t nbytes = count * raw.type.bytes;

  std::ifstream in;
  std::size_t available = 0;
  if (data_file == "LOCAL") {
    in.open(path, std::ios::binary);
    available = std::size_t(fs::file_size(path) - h.payload_offset);
    in.seekg(h.payload_offset);
  } else {
    const fs::path payload = path.parent_path() / data_file;
    in.open(payload, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "ElementDataFile", "cannot open payload '" + payload.string() + "'");
    available = std::size_t(fs::file_size(payload));
  }
  if (available != nbytes)
    throw Error(ErrorKind::format, "ElementDataFile",
                "payload has " + std::to_string(available) + " bytes, header implies " + std::to_string(nbytes));

  std::vector<unsigned char> bytes(nbytes);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(nbytes));
  if (!in) throw Error(ErrorKind::io, "ElementDataFile", "short read");
  if (msb && raw.type.bytes > 1)
    for (std::size_t i = 0; i < count; ++i)
      std::reverse(bytes.begin() + i * raw.type.bytes, bytes.begin() + (i + 1) * raw.type.bytes);

  raw.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) raw.values[i] = decode(bytes.data() + i * raw.type.bytes, raw.type);

  double slope = 1.0, intercept = 0.0;
  if (h.keys.count("RescaleSlope")) slope = parse_list<double>("RescaleSlope", h.keys.at("RescaleSlope"), 1)[0];
  if (h.keys.count("RescaleIntercept"))
    intercept = parse_list<double>("RescaleIntercept", h.keys.at("RescaleIntercept"), 1)[0];
  if (slope != 1.0 || intercept != 0.0)
    for (double& v : raw.values) v = v * slope + intercept;
  return raw;
}

template <typename Scalar>
void write_metaimage(const Volume<Scalar>& vol, const fs::path& path, const char* type_name) {
  vol.validate();
  fs::path header = path;
  header.replace_extension(".mhd");
  fs::path payload = path;
  payload.replace_extension(".raw");
  {
    std::ofstream out(header);
    if (!out) throw Error(ErrorKind::io, header.string(), "cannot write MetaImage header");
    out.precision(17);
    out << "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\n"
        << "CompressedData = False\n"
        << "DimSize = " << vol.dims.x() << ' ' << vol.dims.y() << ' ' << vol.dims.z() << '\n'
        << "ElementSpacing = " << vol.spacing.x() << ' ' << vol.spacing.y() << ' ' << vol.spacing.z() << '\n'
        << "Offset = " << vol.origin.x() << ' ' << vol.origin.y() << ' ' << vol.origin.z() << '\n'
        << "ElementType = " << type_name << '\n'
        << "ElementDataFile = " << payload.filename().string() << '\n';
    if (!out) throw Error(ErrorKind::io, header.string(), "write failed");
  }
  std::ofstream out(payload, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, payload.string(), "cannot write MetaImage payload");
  out.write(reinterpret_cast<const char*>(vol.values.data()), std::streamsize(vol.values.size() * sizeof(Scalar)));
  if (!out) throw Error(ErrorKind::io, payload.string(), "write failed");
}

json sidecar_json(const Image2D& img, const std::string& units, double lo, double hi) {
  return json{{"width", img.width()},
              {"height", img.height()},
              {"pixel_spacing_mm", {img.pixel_spacing.x(), img.pixel_spacing.y()}},
              {"units", units},
              {"min", lo},
              {"max", hi}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, path.string(), "cannot write sidecar");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, path.string(), "write failed");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, path.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string(), e.what());
  }
}

template <typename T>
T json_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::format, key, "missing sidecar field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, key, e.what());
  }
}

void write_png16(const Image2D& img, const fs::path& path, double lo, double hi) {
  std::vector<std::uint8_t> buf(std::size_t(img.width()) * img.height() * 2);
  const double range = hi - lo;
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double t = range > 0.0 ? (double(img(r, c)) - lo) / range : 0.0;
      const auto v = std::uint16_t(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
      const std::size_t i = (std::size_t(r) * img.width() + c) * 2;
      buf[i] = std::uint8_t(v >> 8);  // PNG is big endian
      buf[i + 1] = std::uint8_t(v & 0xff);
    }

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error(ErrorKind::io, path.string(), "cannot write PNG");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorKind::io, path.string(), "libpng write failure");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(img.width()), png_uint_32(img.height()), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height(); ++r) png_write_row(png, buf.data() + std::size_t(r) * img.width() * 2);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

CtVolume load_metaimage(const fs::path& path) {
  RawVolume raw = read_metaimage(path);
  if (!raw.type.is_signed)
    throw Error(ErrorKind::unsupported, "ElementType", "CT volumes require a signed element type");
  CtVolume vol(raw.dims, raw.spacing, raw.origin);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    if (!std::isfinite(raw.values[i])) throw Error(ErrorKind::format, "ElementDataFile", "non-finite voxel value");
    vol.values[Eigen::Index(i)] = float(std::clamp(raw.values[i], double(kHuMin), double(kHuMax)));
  }
  return vol;
}

VoxelMask load_mask_metaimage(const fs::path& path) {
  RawVolume raw = read_metaimage(path);
  VoxelMask mask(raw.dims, raw.spacing, raw.origin);
  for (std::size_t i = 0; i < raw.values.size(); ++i) mask.values[Eigen::Index(i)] = raw.values[i] != 0.0 ? 1 : 0;
  return mask;
}

void save_metaimage(const CtVolume& vol, const fs::path& path) { write_metaimage(vol, path, "MET_FLOAT"); }
void save_metaimage(const VoxelMask& mask, const fs::path& path) { write_metaimage(mask, path, "MET_UCHAR"); }

void save_raw_volume(const CtVolume& vol, const fs::path& json_path) {
  vol.validate();
  fs::path payload = json_path;
  payload.replace_extension(".f32");
  write_json(json{{"dims", {vol.dims.x(), vol.dims.y(), vol.dims.z()}},
                  {"spacing_mm", {vol.spacing.x(), vol.spacing.y(), vol.spacing.z()}},
                  {"origin_mm", {vol.origin.x(), vol.origin.y(), vol.origin.z()}},
                  {"units", "HU"},
                  {"data_file", payload.filename().string()}},
             json_path);
  std::ofstream out(payload, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, payload.string(), "cannot write payload");
  out.write(reinterpret_cast<const char*>(vol.values.data()), std::streamsize(vol.values.size() * sizeof(float)));
}

CtVolume load_raw_volume(const fs::path& json_path) {
  const json j = read_json(json_path);
  const auto dims = json_field<std::vector<int>>(j, "dims");
  const auto spacing = json_field<std::vector<double>>(j, "spacing_mm");
  const auto origin = json_field<std::vector<double>>(j, "origin_mm");
  if (dims.size() != 3) throw Error(ErrorKind::format, "dims", "expected 3 values");
  if (spacing.size() != 3) throw Error(ErrorKind::format, "spacing_mm", "expected 3 values");
  if (origin.size() != 3) throw Error(ErrorKind::format, "origin_mm", "expected 3 values");
  CtVolume vol(Vec3i(dims[0], dims[1], dims[2]), Vec3d(spacing[0], spacing[1], spacing[2]),
               Vec3d(origin[0], origin[1], origin[2]));
  vol.validate();
  const fs::path payload = json_path.parent_path() / json_field<std::string>(j, "data_file");
  std::ifstream in(payload, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "data_file", "cannot open payload '" + payload.string() + "'");
  const auto expected = std::uintmax_t(vol.size()) * sizeof(float);
  if (fs::file_size(payload) != expected) throw Error(ErrorKind::format, "data_file", "payload size mismatch");
  in.read(reinterpret_cast<char*>(vol.values.data()), std::streamsize(expected));
  for (auto& v : vol.values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::format, "data_file", "non-finite voxel value");
    v = std::clamp(v, kHuMin, kHuMax);
  }
  return vol;
}

CtVolume load_volume(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".mhd") return load_metaimage(path);
  if (ext == ".json") return load_raw_volume(path);
  throw Error(ErrorKind::unsupported, path.string(), "expected a .mhd or .json volume");
}

fs::path sidecar_path(const fs::path& image_path) {
  fs::path p = image_path;
  p.replace_extension(".json");
  return p;
}

void save_image(const Image2D& img, const fs::path& path, ImageFormat format, const std::string& units) {
  if (img.pixels.size() == 0) throw Error(ErrorKind::invalid_argument, "image", "empty image");
  const bool finite = img.pixels.allFinite();
  if (format == ImageFormat::png16 && !finite)
    throw Error(ErrorKind::invalid_argument, path.string(), "png16 refuses non-finite pixels");
  const double lo = finite ? double(img.pixels.minCoeff()) : std::nan("");
  const double hi = finite ? double(img.pixels.maxCoeff()) : std::nan("");
  if (!path.parent_path().empty() && !fs::exists(path.parent_path()))
    throw Error(ErrorKind::io, path.string(), "directory does not exist");

  if (format == ImageFormat::raw_f32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, path.string(), "cannot write image");
    out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size() * sizeof(float)));
    if (!out) throw Error(ErrorKind::io, path.string(), "write failed");
  } else {
    write_png16(img, path, lo, hi);
  }
  write_json(sidecar_json(img, units, lo, hi), sidecar_path(path));
}

Image2D load_image(const fs::path& path) {
  const json j = read_json(sidecar_path(path));
  const int w = json_field<int>(j, "width");
  const int h = json_field<int>(j, "height");
  const auto sp = json_field<std::vector<double>>(j, "pixel_spacing_mm");
  if (w <= 0 || h <= 0) throw Error(ErrorKind::format, "width", "image dimensions must be positive");
  if (sp.size() != 2) throw Error(ErrorKind::format, "pixel_spacing_mm", "expected 2 values");
  Image2D img(w, h, Vec2d(sp[0], sp[1]));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, path.string(), "cannot open image");
  const auto expected = std::uintmax_t(img.pixels.size()) * sizeof(float);
  if (fs::file_size(path) != expected) throw Error(ErrorKind::format, path.string(), "payload size mismatch");
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(expected));
  return img;
}

}  // namespace lungsim
