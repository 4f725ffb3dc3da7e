// Text archive of named dense tensors, used for module parameters and for
// the tensors the demo command writes.
//
// Layout, one record per line:
//
//   # abcd-tensors v1
//   <name> <rank> <dim_0> ... <dim_{rank-1}> : <v_0> <v_1> ...
//
// Values are row-major and printed in shortest round-trip form, so a save /
// load cycle is lossless. Blank lines and lines starting with '#' are
// ignored. Names contain no whitespace.
#ifndef ABCD_PARAMS_IO_HPP
#define ABCD_PARAMS_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "abcd/asff.hpp"
#include "abcd/cbam.hpp"
#include "abcd/tensor.hpp"

namespace abcd {

struct TensorRecord {
  std::string name;
  std::vector<Index> dims;
  std::vector<double> values;
};

class TensorArchive {
 public:
  // Replaces an existing record of the same name in place.
  void put(std::string name, std::vector<Index> dims,
           std::vector<double> values);
  const TensorRecord& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<TensorRecord>& records() const { return records_; }

  void write(std::ostream& os) const;
  static TensorArchive read(std::istream& is);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  std::vector<TensorRecord> records_;
  std::map<std::string, std::size_t> index_;
};

void put_feature_map(TensorArchive& ar, const std::string& name,
                     const FeatureMap<double>& map);
FeatureMap<double> get_feature_map(const TensorArchive& ar,
                                   const std::string& name);

void put_vector(TensorArchive& ar, const std::string& name,
                const Vector<double>& v);
Vector<double> get_vector(const TensorArchive& ar, const std::string& name);

// Records: <prefix>.mlp.w0, .mlp.b0, .mlp.w1, .mlp.b1, .mlp.reduction,
// .spatial.weight (1x2x7x7), .spatial.bias.
void put_cbam(TensorArchive& ar, const std::string& prefix,
              const CbamParams<double>& p);
CbamParams<double> get_cbam(const TensorArchive& ar, const std::string& prefix);

// Records: <prefix>.t<target>.s<source>.weight (1xCx1x1) and .bias.
void put_asff(TensorArchive& ar, const std::string& prefix,
              const AsffParams<double>& p);
AsffParams<double> get_asff(const TensorArchive& ar, const std::string& prefix);

}  // namespace abcd

#endif  // ABCD_PARAMS_IO_HPP
