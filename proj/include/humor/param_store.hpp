#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "humor/tensor.hpp"

namespace humor {

struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Named trainable tensors. Iteration order is the sorted key order, which
// keeps serialization and gradient reports deterministic.
class ParamStore {
 public:
  void add(const std::string& name, Tensor t) {
    if (params_.count(name)) throw ParamError("duplicate parameter: " + name);
    params_.emplace(name, std::move(t));
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  Tensor& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParamError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParamError("unknown parameter: " + name);
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, _] : params_) out.push_back(k);
    return out;
  }

  std::size_t size() const { return params_.size(); }
  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) n += t.v.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool operator==(const ParamStore&) const = default;

  // Flat binary key -> array layout. Round-trips bit-exactly.
  void save(std::ostream& os) const {
    write_u32(os, kMagic);
    write_u32(os, static_cast<std::uint32_t>(params_.size()));
    for (const auto& [name, t] : params_) {
      write_u32(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u32(os, static_cast<std::uint32_t>(t.shape.rank));
      write_u32(os, static_cast<std::uint32_t>(t.shape.d0));
      write_u32(os, static_cast<std::uint32_t>(t.shape.d1));
      os.write(reinterpret_cast<const char*>(t.v.data()),
               static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    if (!os) throw ParamError("parameter store write failed");
  }

  static ParamStore load(std::istream& is) {
    if (read_u32(is) != kMagic) throw ParamError("bad parameter store header");
    std::uint32_t count = read_u32(is);
    ParamStore ps;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::uint32_t len = read_u32(is);
      std::string name(len, '\0');
      is.read(name.data(), static_cast<std::streamsize>(len));
      Shape s;
      s.rank = static_cast<int>(read_u32(is));
      s.d0 = static_cast<int>(read_u32(is));
      s.d1 = static_cast<int>(read_u32(is));
      Tensor t(s);
      is.read(reinterpret_cast<char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(double)));
      if (!is) throw ParamError("parameter store read failed");
      ps.add(name, std::move(t));
    }
    return ps;
  }

 private:
  static constexpr std::uint32_t kMagic = 0x48504D31;  // "HPM1"

  static void write_u32(std::ostream& os, std::uint32_t x) {
    os.write(reinterpret_cast<const char*>(&x), sizeof(x));
  }
  static std::uint32_t read_u32(std::istream& is) {
    std::uint32_t x = 0;
    is.read(reinterpret_cast<char*>(&x), sizeof(x));
    if (!is) throw ParamError("parameter store read failed");
    return x;
  }

  std::map<std::string, Tensor> params_;
};

}  // namespace humor
