#include "abcd/params_io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "abcd/errors.hpp"

namespace abcd {
namespace {

constexpr const char* kHeader = "# abcd-tensors v1";

Index element_count(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1},
                         std::multiplies<>());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

template <typename T>
T parse_number(const std::string& token, std::size_t line) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto res = std::from_chars(token.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError("bad number '" + token + "'", line);
  }
  return value;
}

void require_dims(const TensorRecord& r, std::vector<Index> expected) {
  if (r.dims != expected) {
    throw FormatError("tensor '" + r.name + "' has unexpected shape");
  }
}

template <typename M>
std::vector<double> flatten_row_major(const M& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Matrix<double> get_matrix(const TensorArchive& ar, const std::string& name) {
  const auto& r = ar.get(name);
  if (r.dims.size() != 2) {
    throw FormatError("tensor '" + name + "' must be rank 2");
  }
  Matrix<double> m(r.dims[0], r.dims[1]);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = r.values[i * m.cols() + j];
  }
  return m;
}

void put_matrix(TensorArchive& ar, const std::string& name,
                const Matrix<double>& m) {
  ar.put(name, {m.rows(), m.cols()}, flatten_row_major(m));
}

void put_kernel(TensorArchive& ar, const std::string& prefix,
                const Kernel2D<double>& k) {
  ar.put(prefix + ".weight",
         {k.out_channels(), k.in_channels(), k.size(), k.size()},
         {k.weights().data(), k.weights().data() + k.weights().size()});
  put_vector(ar, prefix + ".bias", k.bias());
}

Kernel2D<double> get_kernel(const TensorArchive& ar,
                            const std::string& prefix) {
  const auto& w = ar.get(prefix + ".weight");
  if (w.dims.size() != 4 || w.dims[2] != w.dims[3]) {
    throw FormatError("tensor '" + w.name + "' must be out x in x k x k");
  }
  Vector<double> weights =
      Eigen::Map<const Vector<double>>(w.values.data(), w.values.size());
  return {w.dims[0], w.dims[1], w.dims[2], std::move(weights),
          get_vector(ar, prefix + ".bias")};
}

}  // namespace

void TensorArchive::put(std::string name, std::vector<Index> dims,
                        std::vector<double> values) {
  if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
    throw ConfigError("tensor name must be nonempty without whitespace");
  }
  if (element_count(dims) != static_cast<Index>(values.size())) {
    throw ShapeError("tensor '" + name + "': dims do not match value count");
  }
  TensorRecord rec{name, std::move(dims), std::move(values)};
  if (const auto it = index_.find(name); it != index_.end()) {
    records_[it->second] = std::move(rec);
    return;
  }
  index_.emplace(name, records_.size());
  records_.push_back(std::move(rec));
}

const TensorRecord& TensorArchive::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw FormatError("missing tensor '" + name + "'");
  return records_[it->second];
}

bool TensorArchive::contains(const std::string& name) const {
  return index_.contains(name);
}

void TensorArchive::write(std::ostream& os) const {
  os << kHeader << '\n';
  for (const auto& r : records_) {
    os << r.name << ' ' << r.dims.size();
    for (const Index d : r.dims) os << ' ' << d;
    os << " :";
    for (const double v : r.values) os << ' ' << format_double(v);
    os << '\n';
  }
}

TensorArchive TensorArchive::read(std::istream& is) {
  TensorArchive ar;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    std::string token;
    ls >> name >> token;
    if (name.empty() || token.empty()) {
      throw ParseError("expected '<name> <rank> ...'", lineno);
    }
    const auto rank = parse_number<Index>(token, lineno);
    if (rank < 0) throw ParseError("negative rank", lineno);
    std::vector<Index> dims;
    for (Index i = 0; i < rank; ++i) {
      if (!(ls >> token)) throw ParseError("missing dimension", lineno);
      const auto d = parse_number<Index>(token, lineno);
      if (d <= 0) throw ParseError("dimensions must be positive", lineno);
      dims.push_back(d);
    }
    if (!(ls >> token) || token != ":") {
      throw ParseError("expected ':' after dimensions", lineno);
    }
    std::vector<double> values;
    while (ls >> token) values.push_back(parse_number<double>(token, lineno));
    if (static_cast<Index>(values.size()) != element_count(dims)) {
      throw ParseError("tensor '" + name + "' expects " +
                           std::to_string(element_count(dims)) +
                           " values, got " + std::to_string(values.size()),
                       lineno);
    }
    ar.put(std::move(name), std::move(dims), std::move(values));
  }
  return ar;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write(os);
  if (!os) throw IoError("failed writing " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read(is);
}

void put_feature_map(TensorArchive& ar, const std::string& name,
                     const FeatureMap<double>& map) {
  const auto v = map.values();
  ar.put(name, {map.channels(), map.height(), map.width()},
         {v.begin(), v.end()});
}

FeatureMap<double> get_feature_map(const TensorArchive& ar,
                                   const std::string& name) {
  const auto& r = ar.get(name);
  if (r.dims.size() != 3) {
    throw FormatError("tensor '" + name + "' must be rank 3");
  }
  return {r.dims[0], r.dims[1], r.dims[2], std::span<const double>(r.values)};
}

void put_vector(TensorArchive& ar, const std::string& name,
                const Vector<double>& v) {
  ar.put(name, {v.size()}, {v.data(), v.data() + v.size()});
}

Vector<double> get_vector(const TensorArchive& ar, const std::string& name) {
  const auto& r = ar.get(name);
  if (r.dims.size() != 1) {
    throw FormatError("tensor '" + name + "' must be rank 1");
  }
  return Eigen::Map<const Vector<double>>(r.values.data(), r.dims[0]);
}

void put_cbam(TensorArchive& ar, const std::string& prefix,
              const CbamParams<double>& p) {
  put_matrix(ar, prefix + ".mlp.w0", p.mlp().w0());
  put_vector(ar, prefix + ".mlp.b0", p.mlp().b0());
  put_matrix(ar, prefix + ".mlp.w1", p.mlp().w1());
  put_vector(ar, prefix + ".mlp.b1", p.mlp().b1());
  ar.put(prefix + ".mlp.reduction", {1},
         {static_cast<double>(p.reduction())});
  put_kernel(ar, prefix + ".spatial", p.spatial_kernel());
}

CbamParams<double> get_cbam(const TensorArchive& ar,
                            const std::string& prefix) {
  const auto& red = ar.get(prefix + ".mlp.reduction");
  require_dims(red, {1});
  Matrix<double> w0 = get_matrix(ar, prefix + ".mlp.w0");
  const Index channels = w0.cols();
  Mlp2<double> mlp(channels, static_cast<Index>(red.values[0]), std::move(w0),
                   get_vector(ar, prefix + ".mlp.b0"),
                   get_matrix(ar, prefix + ".mlp.w1"),
                   get_vector(ar, prefix + ".mlp.b1"));
  return {std::move(mlp), get_kernel(ar, prefix + ".spatial")};
}

void put_asff(TensorArchive& ar, const std::string& prefix,
              const AsffParams<double>& p) {
  for (int t = 1; t <= kPyramidLevels; ++t) {
    for (int s = 1; s <= kPyramidLevels; ++s) {
      put_kernel(ar,
                 prefix + ".t" + std::to_string(t) + ".s" + std::to_string(s),
                 p.generator(t, s));
    }
  }
}

AsffParams<double> get_asff(const TensorArchive& ar,
                            const std::string& prefix) {
  AsffParams<double>::Generators g;
  for (int t = 1; t <= kPyramidLevels; ++t) {
    for (int s = 1; s <= kPyramidLevels; ++s) {
      g[t - 1][s - 1] = get_kernel(
          ar, prefix + ".t" + std::to_string(t) + ".s" + std::to_string(s));
    }
  }
  return AsffParams<double>(std::move(g));
}

}  // namespace abcd
