// Field container: header {m, n, L, dtype} followed by row-major node values.
// JSON:   {"m":2,"n":[..],"L":[..],"dtype":"real|complex","values":[..]}
//         complex values are stored as [re, im] pairs.
// Binary: 8-byte magic "C2FIELD1", int32 m, int32 n[3], float64 L[3],
//         int32 dtype (0 real, 1 complex), then float64 values.
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "codim2/torus_fields.hpp"

namespace c2 {

namespace {

using json = nlohmann::json;
constexpr char kMagic[8] = {'C', '2', 'F', 'I', 'E', 'L', 'D', '1'};

json header(const GridSpec& g, DType t) {
  json j;
  j["m"] = g.m;
  j["n"] = std::vector<int>(g.n.begin(), g.n.begin() + g.m);
  j["L"] = std::vector<double>(g.L.begin(), g.L.begin() + g.m);
  j["dtype"] = dtype_name(t);
  return j;
}

GridSpec grid_from(const json& j) {
  return make_grid(j.at("m").get<int>(), j.at("n").get<std::vector<int>>(),
                   j.at("L").get<std::vector<double>>());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump() << "\n";
}

void write_bin_header(std::ofstream& os, const GridSpec& g, int dtype) {
  os.write(kMagic, 8);
  int32_t m = g.m;
  os.write(reinterpret_cast<const char*>(&m), 4);
  for (int a = 0; a < 3; ++a) {
    int32_t n = g.n[a];
    os.write(reinterpret_cast<const char*>(&n), 4);
  }
  for (int a = 0; a < 3; ++a) os.write(reinterpret_cast<const char*>(&g.L[a]), 8);
  int32_t d = dtype;
  os.write(reinterpret_cast<const char*>(&d), 4);
}

struct Loaded {
  GridSpec grid;
  int dtype = 0;
  std::vector<double> raw;
};

Loaded load_any(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[8] = {};
  is.read(magic, 8);
  Loaded out;
  if (is && std::memcmp(magic, kMagic, 8) == 0) {
    int32_t m, n[3], d;
    double L[3];
    is.read(reinterpret_cast<char*>(&m), 4);
    is.read(reinterpret_cast<char*>(n), 12);
    is.read(reinterpret_cast<char*>(L), 24);
    is.read(reinterpret_cast<char*>(&d), 4);
    if (!is) throw Error("truncated field header in " + path);
    std::vector<int> nn(n, n + m);
    std::vector<double> LL(L, L + m);
    out.grid = make_grid(m, nn, LL);
    out.dtype = d;
    std::size_t count = out.grid.nodes() * (d == 1 ? 2 : 1);
    out.raw.resize(count);
    is.read(reinterpret_cast<char*>(out.raw.data()), std::streamsize(count * 8));
    if (!is) throw Error("truncated field values in " + path);
    return out;
  }
  is.clear();
  is.seekg(0);
  json j = json::parse(is);
  out.grid = grid_from(j);
  auto dt = j.at("dtype").get<std::string>();
  if (dt == "real") {
    out.dtype = 0;
    out.raw = j.at("values").get<std::vector<double>>();
  } else if (dt == "complex") {
    out.dtype = 1;
    for (const auto& v : j.at("values")) {
      out.raw.push_back(v.at(0).get<double>());
      out.raw.push_back(v.at(1).get<double>());
    }
  } else {
    throw Error("unsupported dtype " + dt);
  }
  if (out.raw.size() != out.grid.nodes() * (out.dtype == 1 ? 2 : 1))
    throw Error("value count does not match grid in " + path);
  return out;
}

}  // namespace

std::string dtype_name(DType t) {
  switch (t) {
    case DType::Real: return "real";
    case DType::Complex: return "complex";
    case DType::Vector: return "vector";
  }
  return "real";
}

void save_field_json(const std::string& path, const ScalarField& f) {
  json j = header(f.grid, DType::Real);
  j["values"] = f.v;
  write_json(path, j);
}

void save_field_json(const std::string& path, const ComplexField& f) {
  json j = header(f.grid, DType::Complex);
  json vals = json::array();
  for (const auto& z : f.v) vals.push_back({z.real(), z.imag()});
  j["values"] = std::move(vals);
  write_json(path, j);
}

void save_field_binary(const std::string& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  write_bin_header(os, f.grid, 0);
  os.write(reinterpret_cast<const char*>(f.v.data()), std::streamsize(f.v.size() * 8));
}

void save_field_binary(const std::string& path, const ComplexField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  write_bin_header(os, f.grid, 1);
  os.write(reinterpret_cast<const char*>(f.v.data()), std::streamsize(f.v.size() * 16));
}

ScalarField load_scalar(const std::string& path) {
  auto l = load_any(path);
  if (l.dtype != 0) throw Error("expected a real field in " + path);
  return {l.grid, std::move(l.raw)};
}

ComplexField load_complex(const std::string& path) {
  auto l = load_any(path);
  ComplexField f = make_complex(l.grid);
  if (l.dtype == 0) {
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = l.raw[i];
  } else {
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = cplx(l.raw[2 * i], l.raw[2 * i + 1]);
  }
  return f;
}

}  // namespace c2
