#pragma once

#include "plateflow/modal_basis.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace plateflow::io {

using json = nlohmann::ordered_json;
using mesh::Grid;

// 17 significant digits, so output is reproducible bit for bit
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void emit(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        emit(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << ",\n";
        os << pad;
        emit(os, j[k], indent, depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      // JSON has no literal for non-finite values
      if (std::isfinite(x)) {
        os << num(x);
      } else {
        os << json(num(x)).dump();
      }
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline std::string to_string(const json& j) {
  std::ostringstream os;
  detail::emit(os, j, 2, 0);
  os << "\n";
  return os.str();
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, to_string(j)); }

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t k = 0; k < header.size(); ++k) os_ << (k ? "," : "") << header[k];
    os_ << "\n";
  }
  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::invalid_argument("csv row has the wrong number of columns");
    for (std::size_t k = 0; k < values.size(); ++k) os_ << (k ? "," : "") << num(values[k]);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }
  void save(const std::filesystem::path& path) const { write_text(path, str()); }

 private:
  std::size_t columns_;
  std::ostringstream os_;
};

// Binary cache of the eigenmodes, keyed by (grid hash, m, n). Lifts and
// operators are rebuilt on load since they are cheap sparse solves.
namespace cache {

inline constexpr char magic[8] = {'P', 'F', 'M', 'O', 'D', 'E', 'S', '1'};

inline std::filesystem::path path_for(const std::filesystem::path& dir, const Grid& g, int m, int n) {
  char name[96];
  std::snprintf(name, sizeof name, "modes_%016llx_%d_%d.bin", static_cast<unsigned long long>(g.hash()), m, n);
  return dir / name;
}

namespace detail {
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_vec(std::ostream& os, const Vector& v) {
  put(os, static_cast<std::int64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated modes cache");
  return v;
}
inline Vector get_vec(std::istream& is, std::int64_t expected) {
  const auto n = get<std::int64_t>(is);
  if (n != expected) throw std::runtime_error("modes cache does not match the grid");
  Vector v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("truncated modes cache");
  return v;
}
}  // namespace detail

inline void save(const std::filesystem::path& path, const modal::ModalBasis& b) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(magic, sizeof magic);
  detail::put(f, b.fluid->grid().hash());
  detail::put(f, static_cast<std::int32_t>(b.stokes.size()));
  detail::put(f, static_cast<std::int32_t>(b.plate_modes.size()));
  for (const auto& s : b.stokes) {
    detail::put(f, s.mu);
    detail::put(f, s.residual);
    detail::put_vec(f, s.field.values);
    detail::put_vec(f, s.pressure.values);
  }
  for (const auto& p : b.plate_modes) {
    detail::put(f, p.kappa);
    detail::put_vec(f, p.xi.values);
  }
}

// nullopt when the file is absent or keyed differently
inline std::optional<modal::ModalBasis> load(const std::filesystem::path& path, const Grid& g, int m, int n) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  char head[8];
  f.read(head, sizeof head);
  if (!f || !std::equal(head, head + 8, magic)) return std::nullopt;
  if (detail::get<std::uint64_t>(f) != g.hash()) return std::nullopt;
  if (detail::get<std::int32_t>(f) != m || detail::get<std::int32_t>(f) != n) return std::nullopt;
  modal::ModalBasis b;
  b.fluid = std::make_shared<const modal::FluidOperators>(g);
  b.plate = std::make_shared<const mesh::PlateGrid>(g);
  for (int i = 0; i < m; ++i) {
    modal::StokesMode s;
    s.mu = detail::get<double>(f);
    s.residual = detail::get<double>(f);
    s.field.values = detail::get_vec(f, g.num_faces());
    s.pressure.values = detail::get_vec(f, g.num_cells());
    b.stokes.push_back(std::move(s));
  }
  for (int j = 0; j < n; ++j) {
    modal::PlateMode p;
    p.kappa = detail::get<double>(f);
    p.xi.values = detail::get_vec(f, g.nx());
    b.plate_modes.push_back(std::move(p));
  }
  b.lifted = modal::lift_modes(b.plate_modes, *b.fluid);
  return b;
}

// Loads from dir when cached, otherwise computes and stores.
inline modal::ModalBasis load_or_compute(const std::filesystem::path& dir, const Grid& g, int m, int n, bool* hit = nullptr) {
  const auto path = path_for(dir, g, m, n);
  if (auto b = load(path, g, m, n)) {
    if (hit) *hit = true;
    return std::move(*b);
  }
  if (hit) *hit = false;
  modal::ModalBasis b = modal::compute_modal_basis(g, m, n);
  save(path, b);
  return b;
}

}  // namespace cache

}  // namespace plateflow::io
