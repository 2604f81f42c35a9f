#include "mlab/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "mlab/errors.hpp"
#include "mlab/state.hpp"

namespace mlab {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'A', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw io_error(std::string("snapshot: truncated while reading ") + what);
  return v;
}

std::uint8_t kind_byte(const State& s) {
  std::uint8_t b = s.kind == StateKind::wigner ? 1 : 0;
  if (s.grid.boundary == Boundary::periodic_x) b += 2;
  return b;
}

}  // namespace

void save_state(const State& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("snapshot: cannot open for writing: " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(s.grid.nx));
  put(out, static_cast<std::uint32_t>(s.grid.np));
  put(out, s.grid.x_min);
  put(out, s.grid.x_max);
  put(out, s.grid.p_min);
  put(out, s.grid.p_max);
  put(out, s.grid.dx);
  put(out, s.grid.dp);
  put(out, kind_byte(s));
  put(out, s.hbar);
  put(out, s.t);
  out.write(reinterpret_cast<const char*>(s.f.data()),
            static_cast<std::streamsize>(sizeof(double) * s.f.size()));
  if (!out) throw io_error("snapshot: write failed: " + path);
}

State load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("snapshot: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error("snapshot: bad magic (not a state snapshot): " + path);
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kVersion)
    throw io_error("snapshot: unsupported version " + std::to_string(version));
  const auto nx = get<std::uint32_t>(in, "nx");
  const auto np = get<std::uint32_t>(in, "np");
  const auto x_min = get<double>(in, "x_min");
  const auto x_max = get<double>(in, "x_max");
  const auto p_min = get<double>(in, "p_min");
  const auto p_max = get<double>(in, "p_max");
  const auto dx = get<double>(in, "dx");
  const auto dp = get<double>(in, "dp");
  const auto kind = get<std::uint8_t>(in, "kind");
  const auto hbar = get<double>(in, "hbar");
  const auto t = get<double>(in, "t");
  if (kind > 3) throw io_error("snapshot: unknown kind byte " + std::to_string(kind));
  if (nx == 0 || np == 0 || nx > (1u << 20) || np > (1u << 20))
    throw io_error("snapshot: implausible grid dimensions");

  Grid g;
  try {
    g = make_grid(static_cast<int>(nx), static_cast<int>(np), x_min, x_max, p_min, p_max,
                  (kind & 2) ? Boundary::periodic_x : Boundary::box);
  } catch (const error& e) {
    throw io_error(std::string("snapshot: invalid grid: ") + e.what());
  }
  // Stored steps are redundant; a mismatch means the file is corrupt.
  if (std::abs(g.dx - dx) > 1e-12 * std::abs(g.dx) || std::abs(g.dp - dp) > 1e-12 * std::abs(g.dp))
    throw io_error("snapshot: stored lattice steps disagree with extents");

  State s;
  s.grid = g;
  s.kind = (kind & 1) ? StateKind::wigner : StateKind::classical;
  s.hbar = hbar;
  s.t = t;
  s.f.resize(g.size());
  in.read(reinterpret_cast<char*>(s.f.data()),
          static_cast<std::streamsize>(sizeof(double) * s.f.size()));
  if (!in) throw io_error("snapshot: truncated payload: " + path);
  return s;
}

void write_csv(const std::string& path, const std::vector<std::string>& header_comments,
               const std::vector<std::string>& column_names,
               const std::vector<std::vector<double>>& columns) {
  if (column_names.size() != columns.size())
    throw misuse_error("write_csv: name/column count mismatch");
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns)
    if (c.size() != rows) throw misuse_error("write_csv: ragged columns");

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("csv: cannot open for writing: " + path);
  for (const auto& h : header_comments) out << "# " << h << "\n";
  for (std::size_t j = 0; j < column_names.size(); ++j)
    out << column_names[j] << (j + 1 < column_names.size() ? "," : "");
  out << "\n";
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", columns[j][r]);
      out << buf << (j + 1 < columns.size() ? "," : "");
    }
    out << "\n";
  }
  if (!out) throw io_error("csv: write failed: " + path);
}

std::string sha256_bytes(const void* data, std::size_t n) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (!EVP_Digest(data, n, md, &md_len, EVP_sha256(), nullptr))
    throw io_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("sha256: cannot open: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw io_error("sha256: context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  EVP_DigestFinal_ex(ctx, md, &md_len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& preamble,
                    const std::vector<std::pair<std::string, std::string>>& named_files) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("manifest: cannot open for writing: " + path);
  for (const auto& [k, v] : preamble) out << k << " = " << v << "\n";
  for (const auto& [name, file] : named_files) {
    std::ifstream probe(file, std::ios::binary | std::ios::ate);
    if (!probe) throw io_error("manifest: listed file missing: " + file);
    const auto bytes = static_cast<long long>(probe.tellg());
    probe.close();
    out << sha256_file(file) << "  " << bytes << "  " << name << "\n";
  }
  if (!out) throw io_error("manifest: write failed: " + path);
}

}  // namespace mlab
