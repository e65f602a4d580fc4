#ifndef H2KIT_IO_HPP
#define H2KIT_IO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "h2kit/h2_matrix.hpp"

namespace h2kit {

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

struct IOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Container layout (all integers little-endian):
//   magic "H2KT" | u16 version | u8 precision (sizeof scalar) | u8 reserved
// followed by length-prefixed sections, each:
//   u64 payload length | u32 crc32(payload) | payload
// Section order: meta, trees, ranks, bases, coupling, dense, perm.
inline constexpr std::array<char, 4> kMagic{'H', '2', 'K', 'T'};
inline constexpr std::uint16_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace io_detail {

struct Writer {
  std::vector<unsigned char> buf;

  template <class V>
  void put(const V& v) {
    static_assert(std::is_trivially_copyable_v<V>);
    const std::size_t at = buf.size();
    buf.resize(at + sizeof(V));
    std::memcpy(buf.data() + at, &v, sizeof(V));
  }
  template <class V>
  void put_vec(const std::vector<V>& v) {
    static_assert(std::is_trivially_copyable_v<V>);
    put(std::uint64_t(v.size()));
    const std::size_t at = buf.size();
    buf.resize(at + v.size() * sizeof(V));
    std::memcpy(buf.data() + at, v.data(), v.size() * sizeof(V));
  }
};

struct Reader {
  const unsigned char* p;
  const unsigned char* end;

  template <class V>
  V get() {
    static_assert(std::is_trivially_copyable_v<V>);
    if (p + sizeof(V) > end) throw IOError("container section truncated");
    V v;
    std::memcpy(&v, p, sizeof(V));
    p += sizeof(V);
    return v;
  }
  template <class V>
  std::vector<V> get_vec() {
    const std::uint64_t count = get<std::uint64_t>();
    if (p + count * sizeof(V) > end) throw IOError("container section truncated");
    std::vector<V> v(count);
    std::memcpy(v.data(), p, count * sizeof(V));
    p += count * sizeof(V);
    return v;
  }
};

inline void write_section(std::ostream& os, const Writer& w) {
  const std::uint64_t len = w.buf.size();
  const std::uint32_t crc = crc32(w.buf.data(), w.buf.size());
  os.write(reinterpret_cast<const char*>(&len), sizeof(len));
  os.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  os.write(reinterpret_cast<const char*>(w.buf.data()), std::streamsize(len));
}

inline std::vector<unsigned char> read_section(std::istream& is) {
  std::uint64_t len = 0;
  std::uint32_t crc = 0;
  is.read(reinterpret_cast<char*>(&len), sizeof(len));
  is.read(reinterpret_cast<char*>(&crc), sizeof(crc));
  if (!is) throw IOError("container truncated: missing section header");
  std::vector<unsigned char> buf(len);
  is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(len));
  if (std::size_t(is.gcount()) != len)
    throw IOError("container truncated: incomplete section payload");
  if (crc32(buf.data(), buf.size()) != crc)
    throw IOError("container corrupt: section checksum mismatch");
  return buf;
}

inline void put_tree(Writer& w, const FlatTree& t) {
  w.put_vec(t.parent);
  w.put_vec(t.head);
  w.put_vec(t.next);
  w.put_vec(t.level_ptr);
}

inline FlatTree get_tree(Reader& r) {
  FlatTree t;
  t.parent = r.get_vec<index_t>();
  t.head = r.get_vec<index_t>();
  t.next = r.get_vec<index_t>();
  t.level_ptr = r.get_vec<index_t>();
  return t;
}

template <class T>
void put_basis(Writer& w, const BasisTree<T>& b) {
  put_tree(w, b.flat);
  w.put_vec(b.ranks);
  w.put(std::int32_t(b.leaf_dim));
  w.put_vec(b.leaf_pool);
  w.put(std::uint64_t(b.transfer.size()));
  for (const auto& tl : b.transfer) w.put_vec(tl);
}

template <class T>
BasisTree<T> get_basis(Reader& r) {
  BasisTree<T> b;
  b.flat = get_tree(r);
  b.ranks = r.get_vec<int>();
  b.leaf_dim = r.get<std::int32_t>();
  b.leaf_pool = r.template get_vec<T>();
  const std::uint64_t nt = r.get<std::uint64_t>();
  b.transfer.resize(nt);
  for (auto& tl : b.transfer) tl = r.template get_vec<T>();
  return b;
}

template <class T>
void put_layer(Writer& w, const BSRLayer<T>& L) {
  w.put(L.block_rows);
  w.put(L.block_cols);
  w.put(std::int32_t(L.brows));
  w.put(std::int32_t(L.bcols));
  w.put_vec(L.row_ptr);
  w.put_vec(L.col_idx);
  w.put_vec(L.values);
}

template <class T>
BSRLayer<T> get_layer(Reader& r) {
  BSRLayer<T> L;
  L.block_rows = r.get<index_t>();
  L.block_cols = r.get<index_t>();
  L.brows = r.get<std::int32_t>();
  L.bcols = r.get<std::int32_t>();
  L.row_ptr = r.get_vec<index_t>();
  L.col_idx = r.get_vec<index_t>();
  L.values = r.template get_vec<T>();
  return L;
}

}  // namespace io_detail

template <class T>
void save(const H2Matrix<T>& A, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot open for writing: " + path);
  os.write(kMagic.data(), kMagic.size());
  const std::uint16_t ver = kFormatVersion;
  os.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::uint8_t prec = sizeof(T);
  const std::uint8_t reserved = 0;
  os.write(reinterpret_cast<const char*>(&prec), 1);
  os.write(reinterpret_cast<const char*>(&reserved), 1);

  using io_detail::Writer;
  {
    Writer w;  // meta
    w.put(std::int64_t(A.n));
    w.put(std::int32_t(A.m));
    w.put(std::uint8_t(A.symmetric ? 1 : 0));
    w.put(std::int32_t(A.info.dim));
    w.put(A.info.seed);
    w.put(A.info.perturbation);
    w.put(A.info.ell);
    w.put(A.info.eta);
    w.put(std::int32_t(A.info.grid_order));
    io_detail::write_section(os, w);
  }
  {
    Writer w;  // trees + ranks + bases
    io_detail::put_basis(w, A.row_basis);
    if (!A.symmetric) io_detail::put_basis(w, *A.col_basis_store);
    io_detail::write_section(os, w);
  }
  {
    Writer w;  // coupling
    w.put(std::uint64_t(A.coupling.levels.size()));
    for (const auto& L : A.coupling.levels) io_detail::put_layer(w, L);
    io_detail::write_section(os, w);
  }
  {
    Writer w;  // dense
    io_detail::put_layer(w, A.dense);
    io_detail::write_section(os, w);
  }
  {
    Writer w;  // perm
    w.put_vec(A.perm);
    io_detail::write_section(os, w);
  }
  if (!os) throw IOError("write failed: " + path);
}

// Scalar width tag (4 or 8) of a stored matrix without loading it.
inline int stored_precision(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open: " + path);
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  std::uint16_t ver = 0;
  is.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  std::uint8_t prec = 0;
  is.read(reinterpret_cast<char*>(&prec), 1);
  if (!is || magic != kMagic) throw IOError("not a valid container: " + path);
  if (ver != kFormatVersion)
    throw IOError("unsupported container version in " + path);
  return prec;
}

template <class T>
H2Matrix<T> load(const std::string& path) {
  const int prec = stored_precision(path);
  if (prec != int(sizeof(T)))
    throw IOError("precision mismatch: " + path + " stores " +
                  std::to_string(prec * 8) + "-bit scalars");
  std::ifstream is(path, std::ios::binary);
  is.seekg(8);  // past magic, version, precision, reserved

  using io_detail::Reader;
  H2Matrix<T> A;
  {
    auto buf = io_detail::read_section(is);
    Reader r{buf.data(), buf.data() + buf.size()};
    A.n = index_t(r.get<std::int64_t>());
    A.m = r.get<std::int32_t>();
    A.symmetric = r.get<std::uint8_t>() != 0;
    A.info.dim = r.get<std::int32_t>();
    A.info.seed = r.get<std::uint64_t>();
    A.info.perturbation = r.get<double>();
    A.info.ell = r.get<double>();
    A.info.eta = r.get<double>();
    A.info.grid_order = r.get<std::int32_t>();
  }
  {
    auto buf = io_detail::read_section(is);
    Reader r{buf.data(), buf.data() + buf.size()};
    A.row_basis = io_detail::get_basis<T>(r);
    if (!A.symmetric) A.col_basis_store = io_detail::get_basis<T>(r);
  }
  {
    auto buf = io_detail::read_section(is);
    Reader r{buf.data(), buf.data() + buf.size()};
    const std::uint64_t nl = r.get<std::uint64_t>();
    A.coupling.levels.resize(nl);
    for (auto& L : A.coupling.levels) L = io_detail::get_layer<T>(r);
  }
  {
    auto buf = io_detail::read_section(is);
    Reader r{buf.data(), buf.data() + buf.size()};
    A.dense = io_detail::get_layer<T>(r);
  }
  {
    auto buf = io_detail::read_section(is);
    Reader r{buf.data(), buf.data() + buf.size()};
    A.perm = r.get_vec<index_t>();
  }
  return A;
}

}  // namespace h2kit

#endif
