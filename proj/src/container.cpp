#include "gensamplets/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void vec(const Eigen::VectorXd &v) {
    for (Index k = 0; k < v.size(); ++k) f64(v[k]);
  }
  void row_major(const Eigen::MatrixXd &M) {
    for (Index i = 0; i < M.rows(); ++i)
      for (Index j = 0; j < M.cols(); ++j) f64(M(i, j));
  }
  void bytes(const char *p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }
  std::span<const std::uint8_t> view() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { need(1); return b_[pos_++]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  Eigen::VectorXd vec(Index n) {
    Eigen::VectorXd v(n);
    for (Index k = 0; k < n; ++k) v[k] = f64();
    return v;
  }
  Eigen::MatrixXd row_major(Index r, Index c) {
    need(8 * r * c);
    Eigen::MatrixXd M(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) M(i, j) = f64();
    return M;
  }
  /// Length guard for counts read from the file.
  Index count(std::uint64_t limit) {
    const std::uint64_t v = u64();
    if (v > limit) throw InputError("basis container: implausible count");
    return static_cast<Index>(v);
  }
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw InputError("basis container is truncated");
  }
  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t le(int n) {
    need(n);
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * k);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_basis(const SampletBasis &basis) {
  Writer w;
  const ClusterTree &tree = basis.tree();
  w.bytes(kContainerMagic, sizeof kContainerMagic);
  w.u32(kContainerVersion);
  w.u64(static_cast<std::uint64_t>(basis.size()));
  w.u32(static_cast<std::uint32_t>(basis.dimension()));
  w.u32(static_cast<std::uint32_t>(basis.degree()));
  w.u64(static_cast<std::uint64_t>(tree.num_nodes()));
  for (const auto &node : tree.nodes()) {
    w.u32(static_cast<std::uint32_t>(node.level));
    w.i64(node.parent);
    w.u32(static_cast<std::uint32_t>(node.children.size()));
    for (Index c : node.children) w.u64(static_cast<std::uint64_t>(c));
    w.u64(static_cast<std::uint64_t>(node.indices.size()));
    for (Index i : node.indices) w.u64(static_cast<std::uint64_t>(i));
    w.vec(node.box.lower);
    w.vec(node.box.upper);
  }
  for (const auto &f : basis.filters()) {
    w.u64(static_cast<std::uint64_t>(f.n()));
    w.u64(static_cast<std::uint64_t>(f.m_phi));
    w.u64(static_cast<std::uint64_t>(f.R.rows()));
    w.u64(static_cast<std::uint64_t>(f.R.cols()));
    w.row_major(f.Q);
    w.row_major(f.R);
  }
  w.u64(static_cast<std::uint64_t>(basis.size()));
  for (const auto &row : basis.samplets()) {
    w.u64(static_cast<std::uint64_t>(row.node));
    w.u32(static_cast<std::uint32_t>(row.level));
    w.u8(row.scaling ? 1 : 0);
    w.u64(static_cast<std::uint64_t>(row.column));
    w.vec(row.box.lower);
    w.vec(row.box.upper);
  }
  w.u64(fnv1a64(w.view()));
  return w.take();
}

SampletBasis deserialize_basis(std::span<const std::uint8_t> bytes,
                               std::uint64_t *checksum) {
  if (bytes.size() < sizeof kContainerMagic + 8)
    throw InputError("basis container is truncated");
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  const std::uint64_t stored = tail.u64();
  if (fnv1a64(body) != stored) throw InputError("basis container checksum mismatch");
  if (checksum) *checksum = stored;

  Reader r(body);
  char magic[8];
  for (char &c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kContainerMagic, 8) != 0)
    throw InputError("not a basis container (bad magic)");
  if (r.u32() != kContainerVersion) throw InputError("unsupported basis container version");
  const std::uint64_t limit = bytes.size();
  const Index N = r.count(limit);
  const int d = static_cast<int>(r.u32());
  const int q = static_cast<int>(r.u32());
  if (d < 1) throw InputError("basis container: bad dimension");

  const Index num_nodes = r.count(limit);
  std::vector<ClusterNode> nodes(num_nodes);
  for (auto &node : nodes) {
    node.level = static_cast<int>(r.u32());
    node.parent = r.i64();
    const std::uint32_t nc = r.u32();
    if (nc > 2) throw InputError("basis container: node with more than two children");
    for (std::uint32_t k = 0; k < nc; ++k) node.children.push_back(r.count(limit));
    const Index ni = r.count(limit);
    node.indices.resize(ni);
    for (auto &i : node.indices) i = r.count(static_cast<std::uint64_t>(N));
    Eigen::VectorXd lo = r.vec(d), hi = r.vec(d);
    node.box = SupportBox(std::move(lo), std::move(hi));
  }
  ClusterTree tree(std::move(nodes));
  if (tree.size() != N) throw InputError("basis container: tree size mismatch");

  std::vector<ClusterFilters> filters(num_nodes);
  for (auto &f : filters) {
    const Index n = r.count(limit);
    f.m_phi = r.count(limit);
    const Index rr = r.count(limit), rc = r.count(limit);
    f.Q = r.row_major(n, n);
    f.R = r.row_major(rr, rc);
  }
  const Index rows = r.count(limit);
  if (rows != N) throw InputError("basis container: row table size mismatch");
  std::vector<SupportBox> boxes;
  boxes.reserve(rows);
  for (Index i = 0; i < rows; ++i) {
    r.u64();  // node, level, kind and column are recomputed from the tree
    r.u32();
    r.u8();
    r.u64();
    Eigen::VectorXd lo = r.vec(d), hi = r.vec(d);
    boxes.emplace_back(std::move(lo), std::move(hi));
  }
  if (r.pos() != body.size()) throw InputError("basis container has trailing bytes");
  return SampletBasis(std::move(tree), d, q, std::move(filters), std::move(boxes));
}

std::uint64_t save_basis(const SampletBasis &basis, const std::filesystem::path &path) {
  const auto bytes = serialize_basis(basis);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing " + path.string());
  Reader tail(std::span<const std::uint8_t>(bytes).last(8));
  return tail.u64();
}

SampletBasis load_basis(const std::filesystem::path &path, std::uint64_t *checksum) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_basis(bytes, checksum);
}

}  // namespace gensamplets
