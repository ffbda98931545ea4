#include "intact/npz.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

namespace intact {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;

std::uint16_t rd16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t rd32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void wr16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}
void wr32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::vector<unsigned char> inflate_raw(const unsigned char* src,
                                       std::size_t src_len,
                                       std::size_t dst_len) {
  std::vector<unsigned char> out(dst_len);
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK)
    throw io_error("npz: zlib init failed");
  zs.next_in = const_cast<unsigned char*>(src);
  zs.avail_in = static_cast<uInt>(src_len);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(dst_len);
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END)
    throw io_error("npz: deflate stream is corrupt");
  return out;
}

NpyArray parse_npy(const unsigned char* p, std::size_t len) {
  if (len < 10 || std::memcmp(p, "\x93NUMPY", 6) != 0)
    throw io_error("npz: member is not an npy array");
  const int major = p[6];
  std::size_t header_len, header_off;
  if (major == 1) {
    header_len = rd16(p + 8);
    header_off = 10;
  } else {
    header_len = rd32(p + 8);
    header_off = 12;
  }
  if (header_off + header_len > len) throw io_error("npz: truncated npy header");
  std::string header(reinterpret_cast<const char*>(p + header_off), header_len);

  auto find_value = [&](const std::string& key) {
    const std::size_t k = header.find("'" + key + "'");
    if (k == std::string::npos) throw io_error("npz: npy header missing " + key);
    std::size_t colon = header.find(':', k);
    return header.substr(colon + 1);
  };

  NpyArray arr;
  {
    std::string v = find_value("descr");
    const std::size_t q1 = v.find('\'');
    const std::size_t q2 = v.find('\'', q1 + 1);
    std::string descr = v.substr(q1 + 1, q2 - q1 - 1);
    const std::size_t data_off = header_off + header_len;
    const unsigned char* d = p + data_off;
    const std::size_t data_len = len - data_off;

    std::string vf = find_value("fortran_order");
    arr.fortran_order = vf.find("True") != std::string::npos &&
                        vf.find("True") < vf.find(',');

    std::string vs = find_value("shape");
    const std::size_t p1 = vs.find('(');
    const std::size_t p2 = vs.find(')');
    std::string tuple = vs.substr(p1 + 1, p2 - p1 - 1);
    std::size_t pos = 0;
    while (pos < tuple.size()) {
      while (pos < tuple.size() && !std::isdigit(tuple[pos])) ++pos;
      if (pos >= tuple.size()) break;
      std::size_t end = pos;
      while (end < tuple.size() && std::isdigit(tuple[end])) ++end;
      arr.shape.push_back(std::stoll(tuple.substr(pos, end - pos)));
      pos = end;
    }

    const Index count = arr.size();
    arr.data.resize(static_cast<std::size_t>(count));
    auto need = [&](std::size_t bytes) {
      if (data_len < bytes) throw io_error("npz: npy data truncated");
    };
    if (descr == "<f8") {
      need(8 * static_cast<std::size_t>(count));
      std::memcpy(arr.data.data(), d, 8 * static_cast<std::size_t>(count));
    } else if (descr == "<f4") {
      need(4 * static_cast<std::size_t>(count));
      for (Index i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, d + 4 * i, 4);
        arr.data[static_cast<std::size_t>(i)] = static_cast<double>(f);
      }
    } else if (descr == "<i8") {
      need(8 * static_cast<std::size_t>(count));
      for (Index i = 0; i < count; ++i) {
        std::int64_t v64;
        std::memcpy(&v64, d + 8 * i, 8);
        arr.data[static_cast<std::size_t>(i)] = static_cast<double>(v64);
      }
    } else if (descr == "<i4") {
      need(4 * static_cast<std::size_t>(count));
      for (Index i = 0; i < count; ++i) {
        std::int32_t v32;
        std::memcpy(&v32, d + 4 * i, 4);
        arr.data[static_cast<std::size_t>(i)] = static_cast<double>(v32);
      }
    } else {
      throw io_error("npz: unsupported dtype " + descr +
                     " (expected little-endian f4/f8/i4/i8)");
    }
  }
  return arr;
}

}  // namespace

double NpyArray::element(const std::vector<Index>& idx) const {
  if (static_cast<Index>(idx.size()) != ndim())
    throw std::invalid_argument("NpyArray::element: rank mismatch");
  Index flat = 0;
  if (fortran_order) {
    Index stride = 1;
    for (Index d = 0; d < ndim(); ++d) {
      flat += idx[static_cast<std::size_t>(d)] * stride;
      stride *= shape[static_cast<std::size_t>(d)];
    }
  } else {
    Index stride = 1;
    for (Index d = ndim(); d-- > 0;) {
      flat += idx[static_cast<std::size_t>(d)] * stride;
      stride *= shape[static_cast<std::size_t>(d)];
    }
  }
  return data[static_cast<std::size_t>(flat)];
}

std::map<std::string, NpyArray> read_npz(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("npz: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 22) throw io_error("npz: " + path + " is not a zip archive");

  // locate end-of-central-directory (allow a trailing comment)
  std::size_t eocd = std::string::npos;
  const std::size_t scan_from = buf.size() >= 65558 ? buf.size() - 65558 : 0;
  for (std::size_t i = buf.size() - 22 + 1; i-- > scan_from;) {
    if (rd32(buf.data() + i) == kEocdSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos)
    throw io_error("npz: " + path + " has no zip central directory");

  const std::uint16_t n_entries = rd16(buf.data() + eocd + 10);
  std::uint32_t cd_off = rd32(buf.data() + eocd + 16);
  if (cd_off == 0xFFFFFFFFu)
    throw io_error("npz: zip64 archives are not supported");

  std::map<std::string, NpyArray> out;
  std::size_t pos = cd_off;
  for (int e = 0; e < n_entries; ++e) {
    if (pos + 46 > buf.size() || rd32(buf.data() + pos) != kCentralSig)
      throw io_error("npz: corrupt central directory in " + path);
    const std::uint16_t method = rd16(buf.data() + pos + 10);
    const std::uint32_t csize = rd32(buf.data() + pos + 20);
    const std::uint32_t usize = rd32(buf.data() + pos + 24);
    const std::uint16_t name_len = rd16(buf.data() + pos + 28);
    const std::uint16_t extra_len = rd16(buf.data() + pos + 30);
    const std::uint16_t comment_len = rd16(buf.data() + pos + 32);
    const std::uint32_t local_off = rd32(buf.data() + pos + 42);
    std::string name(reinterpret_cast<const char*>(buf.data() + pos + 46),
                     name_len);
    pos += 46u + name_len + extra_len + comment_len;
    if (csize == 0xFFFFFFFFu || local_off == 0xFFFFFFFFu)
      throw io_error("npz: zip64 archives are not supported");

    if (rd32(buf.data() + local_off) != kLocalSig)
      throw io_error("npz: corrupt local header in " + path);
    const std::uint16_t lname = rd16(buf.data() + local_off + 26);
    const std::uint16_t lextra = rd16(buf.data() + local_off + 28);
    const unsigned char* data = buf.data() + local_off + 30 + lname + lextra;

    std::vector<unsigned char> plain;
    const unsigned char* npy = data;
    std::size_t npy_len = csize;
    if (method == 8) {
      plain = inflate_raw(data, csize, usize);
      npy = plain.data();
      npy_len = plain.size();
    } else if (method != 0) {
      throw io_error("npz: unsupported zip compression method");
    }

    // strip the conventional .npy suffix from member names
    std::string key = name;
    if (key.size() > 4 && key.substr(key.size() - 4) == ".npy")
      key = key.substr(0, key.size() - 4);
    out[key] = parse_npy(npy, npy_len);
  }
  return out;
}

void write_npz(const std::string& path,
               const std::vector<std::pair<std::string, NpyArray>>& arrays) {
  std::string file;
  std::string central;
  int count = 0;
  for (const auto& [key, arr] : arrays) {
    // npy payload, '<f8' C order
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
    for (std::size_t d = 0; d < arr.shape.size(); ++d) {
      header += std::to_string(arr.shape[d]);
      if (arr.shape.size() == 1 || d + 1 < arr.shape.size()) header += ",";
      if (d + 1 < arr.shape.size()) header += " ";
    }
    header += "), }";
    const std::size_t base = 10 + header.size() + 1;
    header.append((64 - base % 64) % 64, ' ');
    header.push_back('\n');

    std::string npy("\x93NUMPY", 6);
    npy.push_back(1);
    npy.push_back(0);
    wr16(npy, static_cast<std::uint16_t>(header.size()));
    npy += header;
    const std::size_t data_bytes = arr.data.size() * 8;
    npy.append(reinterpret_cast<const char*>(arr.data.data()), data_bytes);

    const std::string name = key + ".npy";
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(npy.data()),
              static_cast<uInt>(npy.size())));
    const std::uint32_t off = static_cast<std::uint32_t>(file.size());

    wr32(file, kLocalSig);
    wr16(file, 20);  // version needed
    wr16(file, 0);   // flags
    wr16(file, 0);   // stored
    wr16(file, 0);   // mod time
    wr16(file, 0);   // mod date
    wr32(file, crc);
    wr32(file, static_cast<std::uint32_t>(npy.size()));
    wr32(file, static_cast<std::uint32_t>(npy.size()));
    wr16(file, static_cast<std::uint16_t>(name.size()));
    wr16(file, 0);  // extra
    file += name;
    file += npy;

    wr32(central, kCentralSig);
    wr16(central, 20);
    wr16(central, 20);
    wr16(central, 0);
    wr16(central, 0);
    wr16(central, 0);
    wr16(central, 0);
    wr32(central, crc);
    wr32(central, static_cast<std::uint32_t>(npy.size()));
    wr32(central, static_cast<std::uint32_t>(npy.size()));
    wr16(central, static_cast<std::uint16_t>(name.size()));
    wr16(central, 0);
    wr16(central, 0);
    wr16(central, 0);
    wr16(central, 0);
    wr32(central, 0);
    wr32(central, off);
    central += name;
    ++count;
  }

  const std::uint32_t cd_off = static_cast<std::uint32_t>(file.size());
  file += central;
  wr32(file, kEocdSig);
  wr16(file, 0);
  wr16(file, 0);
  wr16(file, static_cast<std::uint16_t>(count));
  wr16(file, static_cast<std::uint16_t>(count));
  wr32(file, static_cast<std::uint32_t>(central.size()));
  wr32(file, cd_off);
  wr16(file, 0);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("npz: cannot open " + path + " for writing");
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
}

}  // namespace intact
